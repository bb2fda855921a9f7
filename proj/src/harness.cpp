#include "alsched/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include "csv.hpp"

namespace alsched {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

template <typename T>
T scalar(const YAML::Node& node, const std::string& field) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(field, "cannot read value '" + (node.IsScalar() ? node.Scalar() : std::string("<non-scalar>")) + "'");
    }
}

std::size_t count_field(const YAML::Node& node, const std::string& field) {
    const auto v = scalar<long long>(node, field);
    if (v < 0) throw ConfigError(field, "must be non-negative");
    return static_cast<std::size_t>(v);
}

std::vector<std::string> string_list(const YAML::Node& node, const std::string& field) {
    if (node.IsNull()) return {};
    if (node.IsScalar()) {
        // comma-separated shorthand
        std::vector<std::string> out;
        for (auto part : csv::split_line(node.Scalar())) {
            auto t = std::string(csv::trim(part));
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }
    if (!node.IsSequence()) throw ConfigError(field, "expected a list");
    std::vector<std::string> out;
    for (const auto& item : node) out.push_back(scalar<std::string>(item, field));
    return out;
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
    if (!node.IsMap()) throw ConfigError(where, "expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError(where.empty() ? key : where + "." + key, "unknown key");
    }
}

fs::path resolve_path(const std::string& text, const fs::path& base) {
    fs::path p(text);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
}

SynthConfig parse_synth(const YAML::Node& node) {
    SynthConfig s;
    if (node.IsNull()) return s;
    check_keys(node, {"horizon", "pool_size", "dim", "noise", "drift", "drift_fraction", "holdout_fraction"}, "synthetic");
    if (node["horizon"]) s.horizon = scalar<int>(node["horizon"], "horizon");
    if (node["pool_size"]) s.pool_size = scalar<int>(node["pool_size"], "pool_size");
    if (node["dim"]) s.dim = scalar<int>(node["dim"], "dim");
    if (node["noise"]) s.noise = scalar<double>(node["noise"], "noise");
    if (node["drift"]) s.drift = scalar<double>(node["drift"], "drift");
    if (node["drift_fraction"]) s.drift_fraction = scalar<double>(node["drift_fraction"], "drift_fraction");
    if (node["holdout_fraction"]) s.holdout_fraction = scalar<double>(node["holdout_fraction"], "holdout_fraction");
    return s;
}

CsvSource parse_csv(const YAML::Node& node, const fs::path& base) {
    check_keys(node, {"sensors", "labels", "label_column", "holdout_fraction"}, "csv");
    CsvSource c;
    if (!node["labels"]) throw ConfigError("csv.labels", "missing label file");
    c.labels = resolve_path(scalar<std::string>(node["labels"], "csv.labels"), base);
    if (node["label_column"]) c.label_column = scalar<std::string>(node["label_column"], "csv.label_column");
    if (node["holdout_fraction"]) c.holdout_fraction = scalar<double>(node["holdout_fraction"], "csv.holdout_fraction");
    const auto sensors = node["sensors"];
    if (!sensors || !sensors.IsSequence() || sensors.size() == 0)
        throw ConfigError("csv.sensors", "at least one sensor is required");
    for (const auto& s : sensors) {
        check_keys(s, {"name", "file", "files", "schema"}, "csv.sensors");
        SensorSource src;
        if (!s["name"]) throw ConfigError("csv.sensors.name", "missing");
        src.name = scalar<std::string>(s["name"], "csv.sensors.name");
        if (s["file"]) src.files.push_back(resolve_path(scalar<std::string>(s["file"], "csv.sensors.file"), base));
        if (s["files"])
            for (const auto& f : string_list(s["files"], "csv.sensors.files")) src.files.push_back(resolve_path(f, base));
        if (src.files.empty()) throw ConfigError("csv.sensors.file", "sensor '" + src.name + "' has no data file");
        if (!s["schema"]) throw ConfigError("csv.sensors.schema", "sensor '" + src.name + "' has no schema file");
        src.schema = resolve_path(scalar<std::string>(s["schema"], "csv.sensors.schema"), base);
        c.sensors.push_back(std::move(src));
    }
    return c;
}

const std::set<std::string> kExperimentKeys = {
    "name", "horizon", "budget", "init_rounds", "init_strategy", "select_strategy", "regressor", "ridge_lambda",
    "lasso_lambda", "knn_k", "tree_max_depth", "tree_min_leaf", "forest_trees", "forest_max_features",
    "boost_stages", "boost_depth", "boost_learning_rate", "committee_size", "emcm_learning_rate", "udi_bins",
    "udi_binning", "ucl_clusters", "ucl_top_clusters", "cl_clusters", "pr_sequential", "pareto_positive",
    "pareto_negative", "epsilon", "checkpoints", "random_baseline_repeats", "fit_every_round"};

ExperimentConfig parse_experiment(const YAML::Node& node, int default_horizon) {
    check_keys(node, kExperimentKeys, "");
    ExperimentConfig e;
    e.horizon = default_horizon;
    e.checkpoints.clear();
    auto get = [&](const char* key) { return node[key]; };
    if (get("name")) e.name = scalar<std::string>(get("name"), "name");
    if (get("horizon")) e.horizon = scalar<int>(get("horizon"), "horizon");
    if (get("budget")) e.budget = count_field(get("budget"), "budget");
    if (get("init_rounds")) e.init_rounds = scalar<int>(get("init_rounds"), "init_rounds");
    try {
        if (get("init_strategy")) e.init_strategy = parse_strategy(scalar<std::string>(get("init_strategy"), "init_strategy"));
    } catch (const std::invalid_argument& ex) {
        throw ConfigError("init_strategy", ex.what());
    }
    try {
        if (get("select_strategy"))
            e.select_strategy = parse_strategy(scalar<std::string>(get("select_strategy"), "select_strategy"));
    } catch (const std::invalid_argument& ex) {
        throw ConfigError("select_strategy", ex.what());
    }
    try {
        if (get("regressor")) e.regressor = parse_regressor_kind(scalar<std::string>(get("regressor"), "regressor"));
    } catch (const std::invalid_argument& ex) {
        throw ConfigError("regressor", ex.what());
    }
    auto& p = e.regressor_params;
    if (get("ridge_lambda")) p.ridge_lambda = scalar<double>(get("ridge_lambda"), "ridge_lambda");
    if (get("lasso_lambda")) p.lasso_lambda = scalar<double>(get("lasso_lambda"), "lasso_lambda");
    if (get("knn_k")) p.knn_k = scalar<int>(get("knn_k"), "knn_k");
    if (get("tree_max_depth")) p.tree_max_depth = scalar<int>(get("tree_max_depth"), "tree_max_depth");
    if (get("tree_min_leaf")) p.tree_min_leaf = scalar<int>(get("tree_min_leaf"), "tree_min_leaf");
    if (get("forest_trees")) p.forest_trees = scalar<int>(get("forest_trees"), "forest_trees");
    if (get("forest_max_features")) p.forest_max_features = scalar<int>(get("forest_max_features"), "forest_max_features");
    if (get("boost_stages")) p.boost_stages = scalar<int>(get("boost_stages"), "boost_stages");
    if (get("boost_depth")) p.boost_depth = scalar<int>(get("boost_depth"), "boost_depth");
    if (get("boost_learning_rate")) p.boost_learning_rate = scalar<double>(get("boost_learning_rate"), "boost_learning_rate");
    if (get("committee_size")) e.committee_size = scalar<int>(get("committee_size"), "committee_size");
    if (get("emcm_learning_rate")) e.emcm_learning_rate = scalar<double>(get("emcm_learning_rate"), "emcm_learning_rate");
    if (get("udi_bins")) e.udi_bins = scalar<int>(get("udi_bins"), "udi_bins");
    if (get("udi_binning")) {
        const auto b = scalar<std::string>(get("udi_binning"), "udi_binning");
        if (b == "equal_width") e.udi_binning = Binning::equal_width;
        else if (b == "equal_frequency") e.udi_binning = Binning::equal_frequency;
        else throw ConfigError("udi_binning", "expected equal_width or equal_frequency, got '" + b + "'");
    }
    if (get("ucl_clusters")) e.ucl_clusters = count_field(get("ucl_clusters"), "ucl_clusters");
    if (get("ucl_top_clusters")) e.ucl_top_clusters = count_field(get("ucl_top_clusters"), "ucl_top_clusters");
    if (get("cl_clusters")) e.cl_clusters = count_field(get("cl_clusters"), "cl_clusters");
    if (get("pr_sequential")) e.pr_sequential = scalar<bool>(get("pr_sequential"), "pr_sequential");
    if (get("pareto_positive")) e.pareto_positive = string_list(get("pareto_positive"), "pareto_positive");
    if (get("pareto_negative")) e.pareto_negative = string_list(get("pareto_negative"), "pareto_negative");
    if (get("epsilon")) e.epsilon = scalar<double>(get("epsilon"), "epsilon");
    if (get("checkpoints")) {
        const auto node_cp = get("checkpoints");
        if (!node_cp.IsSequence()) throw ConfigError("checkpoints", "expected a list of rounds");
        for (const auto& c : node_cp) e.checkpoints.push_back(scalar<int>(c, "checkpoints"));
        if (e.checkpoints.empty()) throw ConfigError("checkpoints", "must not be empty");
    }
    if (get("random_baseline_repeats"))
        e.random_baseline_repeats = scalar<int>(get("random_baseline_repeats"), "random_baseline_repeats");
    if (get("fit_every_round")) e.fit_every_round = scalar<bool>(get("fit_every_round"), "fit_every_round");
    return e;
}

// Empty checkpoints mean "the defaults that fit the horizon".
void fill_checkpoints(ExperimentConfig& e) {
    if (!e.checkpoints.empty() || e.horizon <= 0) return;
    for (int c : {20, 50, 100})
        if (c <= e.horizon) e.checkpoints.push_back(c);
    if (e.checkpoints.empty()) e.checkpoints.push_back(e.horizon);
}

bool valid_name(const std::string& name) {
    return !name.empty() && std::all_of(name.begin(), name.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
    });
}

}  // namespace

std::vector<ExperimentConfig> flagship_experiments() {
    std::vector<ExperimentConfig> out(3);
    out[0].name = "di15_qbc_boot";
    out[0].select_strategy = StrategyName::qbc_boot;
    out[1].name = "di15_emcm_boot";
    out[1].select_strategy = StrategyName::emcm_boot;
    out[2].name = "di15_random";
    out[2].select_strategy = StrategyName::random;
    return out;
}

HarnessConfig parse_harness_config(const std::string& text, const fs::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError("config", std::string("not valid YAML: ") + e.what());
    }
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    check_keys(root, {"output", "parallel", "seeds", "synthetic", "csv", "experiments"}, "");

    HarnessConfig cfg;
    if (root["synthetic"] && root["csv"]) throw ConfigError("csv", "give either a synthetic or a csv source, not both");
    if (root["csv"]) cfg.source = parse_csv(root["csv"], base_dir);
    else cfg.source = parse_synth(root["synthetic"] ? root["synthetic"] : YAML::Node());
    if (root["output"]) cfg.output = resolve_path(scalar<std::string>(root["output"], "output"), base_dir);
    else cfg.output = resolve_path(cfg.output.string(), base_dir);
    if (root["parallel"]) cfg.parallel = scalar<int>(root["parallel"], "parallel");
    if (root["seeds"]) {
        const auto s = root["seeds"];
        cfg.seeds.clear();
        if (s.IsScalar()) cfg.seeds.push_back(scalar<std::uint64_t>(s, "seeds"));
        else if (s.IsSequence())
            for (const auto& v : s) cfg.seeds.push_back(scalar<std::uint64_t>(v, "seeds"));
        else throw ConfigError("seeds", "expected a seed or a list of seeds");
    }

    const int horizon = cfg.synthetic() ? std::get<SynthConfig>(cfg.source).horizon : 0;
    if (root["experiments"]) {
        const auto ex = root["experiments"];
        if (!ex.IsSequence()) throw ConfigError("experiments", "expected a list");
        for (const auto& node : ex) cfg.experiments.push_back(parse_experiment(node, horizon));
    } else {
        cfg.experiments = flagship_experiments();
        for (auto& e : cfg.experiments) {
            e.horizon = horizon;
            e.checkpoints.clear();
        }
    }
    for (auto& e : cfg.experiments) {
        if (e.horizon > 0 && e.init_rounds > e.horizon) e.init_rounds = e.horizon;
        fill_checkpoints(e);
    }
    cfg.validate();
    return cfg;
}

HarnessConfig load_harness_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_harness_config(ss.str(), path.parent_path());
}

void HarnessConfig::validate() const {
    if (parallel < 1) throw ConfigError("parallel", "must be at least 1");
    if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw ConfigError("seeds", "seeds must be distinct");
    if (experiments.empty()) throw ConfigError("experiments", "at least one experiment is required");
    if (output.empty()) throw ConfigError("output", "must not be empty");
    if (synthetic()) {
        const auto& s = std::get<SynthConfig>(source);
        s.validate();
        for (const auto& e : experiments) {
            if (e.horizon != s.horizon)
                throw ConfigError("horizon", "experiment '" + e.name + "' horizon " + std::to_string(e.horizon) +
                                                 " differs from the synthetic horizon " + std::to_string(s.horizon));
            if (e.budget > static_cast<std::size_t>(s.pool_size))
                throw ConfigError("budget", "experiment '" + e.name + "' budget " + std::to_string(e.budget) +
                                                " exceeds the pool size " + std::to_string(s.pool_size));
        }
    } else {
        const auto& c = std::get<CsvSource>(source);
        if (!(c.holdout_fraction > 0.0 && c.holdout_fraction < 1.0))
            throw ConfigError("csv.holdout_fraction", "must lie in (0, 1)");
        if (c.label_column.empty()) throw ConfigError("csv.label_column", "must not be empty");
    }
    std::set<std::string> names;
    for (const auto& e : experiments) {
        if (!valid_name(e.name)) throw ConfigError("name", "experiment name '" + e.name + "' must be [A-Za-z0-9_.-]+");
        if (!names.insert(e.name).second) throw ConfigError("name", "duplicate experiment name '" + e.name + "'");
        if (e.horizon == 0) {
            // horizon comes from the data; check everything else
            ExperimentConfig probe = e;
            probe.horizon = std::max({1, probe.init_rounds, probe.checkpoints.empty() ? 1 : *std::max_element(
                                                                       probe.checkpoints.begin(), probe.checkpoints.end())});
            probe.validate();
        } else {
            e.validate();
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) { return csv::format_double(v); }

void emit_experiment(YAML::Emitter& y, const ExperimentConfig& e) {
    const auto& p = e.regressor_params;
    y << YAML::BeginMap;
    y << YAML::Key << "name" << YAML::Value << e.name;
    y << YAML::Key << "horizon" << YAML::Value << e.horizon;
    y << YAML::Key << "budget" << YAML::Value << e.budget;
    y << YAML::Key << "init_rounds" << YAML::Value << e.init_rounds;
    y << YAML::Key << "init_strategy" << YAML::Value << to_string(e.init_strategy);
    y << YAML::Key << "select_strategy" << YAML::Value << to_string(e.select_strategy);
    y << YAML::Key << "regressor" << YAML::Value << to_string(e.regressor);
    y << YAML::Key << "ridge_lambda" << YAML::Value << fmt_double(p.ridge_lambda);
    y << YAML::Key << "lasso_lambda" << YAML::Value << fmt_double(p.lasso_lambda);
    y << YAML::Key << "knn_k" << YAML::Value << p.knn_k;
    y << YAML::Key << "tree_max_depth" << YAML::Value << p.tree_max_depth;
    y << YAML::Key << "tree_min_leaf" << YAML::Value << p.tree_min_leaf;
    y << YAML::Key << "forest_trees" << YAML::Value << p.forest_trees;
    y << YAML::Key << "forest_max_features" << YAML::Value << p.forest_max_features;
    y << YAML::Key << "boost_stages" << YAML::Value << p.boost_stages;
    y << YAML::Key << "boost_depth" << YAML::Value << p.boost_depth;
    y << YAML::Key << "boost_learning_rate" << YAML::Value << fmt_double(p.boost_learning_rate);
    y << YAML::Key << "committee_size" << YAML::Value << e.committee_size;
    y << YAML::Key << "emcm_learning_rate" << YAML::Value << fmt_double(e.emcm_learning_rate);
    y << YAML::Key << "udi_bins" << YAML::Value << e.udi_bins;
    y << YAML::Key << "udi_binning" << YAML::Value
      << (e.udi_binning == Binning::equal_width ? "equal_width" : "equal_frequency");
    y << YAML::Key << "ucl_clusters" << YAML::Value << e.ucl_clusters;
    y << YAML::Key << "ucl_top_clusters" << YAML::Value << e.ucl_top_clusters;
    y << YAML::Key << "cl_clusters" << YAML::Value << e.cl_clusters;
    y << YAML::Key << "pr_sequential" << YAML::Value << e.pr_sequential;
    y << YAML::Key << "pareto_positive" << YAML::Value << YAML::Flow << e.pareto_positive;
    y << YAML::Key << "pareto_negative" << YAML::Value << YAML::Flow << e.pareto_negative;
    y << YAML::Key << "epsilon" << YAML::Value << fmt_double(e.epsilon);
    if (!e.checkpoints.empty()) y << YAML::Key << "checkpoints" << YAML::Value << YAML::Flow << e.checkpoints;
    y << YAML::Key << "random_baseline_repeats" << YAML::Value << e.random_baseline_repeats;
    y << YAML::Key << "fit_every_round" << YAML::Value << e.fit_every_round;
    y << YAML::EndMap;
}

}  // namespace

std::string serialize_harness_config(const HarnessConfig& config) {
    YAML::Emitter y;
    y << YAML::BeginMap;
    y << YAML::Key << "output" << YAML::Value << config.output.string();
    y << YAML::Key << "parallel" << YAML::Value << config.parallel;
    y << YAML::Key << "seeds" << YAML::Value << YAML::Flow << config.seeds;
    if (config.synthetic()) {
        const auto& s = std::get<SynthConfig>(config.source);
        y << YAML::Key << "synthetic" << YAML::Value << YAML::BeginMap;
        y << YAML::Key << "horizon" << YAML::Value << s.horizon;
        y << YAML::Key << "pool_size" << YAML::Value << s.pool_size;
        y << YAML::Key << "dim" << YAML::Value << s.dim;
        y << YAML::Key << "noise" << YAML::Value << fmt_double(s.noise);
        y << YAML::Key << "drift" << YAML::Value << fmt_double(s.drift);
        y << YAML::Key << "drift_fraction" << YAML::Value << fmt_double(s.drift_fraction);
        y << YAML::Key << "holdout_fraction" << YAML::Value << fmt_double(s.holdout_fraction);
        y << YAML::EndMap;
    } else {
        const auto& c = std::get<CsvSource>(config.source);
        y << YAML::Key << "csv" << YAML::Value << YAML::BeginMap;
        y << YAML::Key << "labels" << YAML::Value << c.labels.string();
        y << YAML::Key << "label_column" << YAML::Value << c.label_column;
        y << YAML::Key << "holdout_fraction" << YAML::Value << fmt_double(c.holdout_fraction);
        y << YAML::Key << "sensors" << YAML::Value << YAML::BeginSeq;
        for (const auto& s : c.sensors) {
            std::vector<std::string> files;
            for (const auto& f : s.files) files.push_back(f.string());
            y << YAML::BeginMap << YAML::Key << "name" << YAML::Value << s.name;
            y << YAML::Key << "files" << YAML::Value << YAML::Flow << files;
            y << YAML::Key << "schema" << YAML::Value << s.schema.string() << YAML::EndMap;
        }
        y << YAML::EndSeq << YAML::EndMap;
    }
    y << YAML::Key << "experiments" << YAML::Value << YAML::BeginSeq;
    for (const auto& e : config.experiments) emit_experiment(y, e);
    y << YAML::EndSeq << YAML::EndMap;
    return std::string(y.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

namespace {

std::map<SampleKey, double> read_labels(const fs::path& path, const std::string& column) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open label file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = csv::split_line(line);
    auto find = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (csv::trim(header[i]) == name) return i;
        throw SchemaError(path.string() + ": missing column '" + name + "'");
    };
    const auto ci = find("case_id"), ti = find("timestamp"), li = find(column);
    std::map<SampleKey, double> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (csv::trim(line).empty()) continue;
        const auto cells = csv::split_line(line);
        if (cells.size() != header.size()) throw RowError(line_no, "expected " + std::to_string(header.size()) + " cells");
        const auto ts = csv::parse_int(csv::trim(cells[ti]));
        if (!ts) throw RowError(line_no, "bad timestamp '" + cells[ti] + "'");
        if (csv::is_missing_token(csv::trim(cells[li]))) continue;
        const auto y = csv::parse_double(csv::trim(cells[li]));
        if (!y) throw RowError(line_no, "bad label '" + cells[li] + "'");
        SampleKey key{std::string(csv::trim(cells[ci])), *ts};
        if (labels.count(key)) throw ConflictError("duplicate label for case " + key.case_id + " at " + std::to_string(*ts));
        labels[key] = *y;
    }
    return labels;
}

ExperimentData load_csv_data(const CsvSource& src, std::uint64_t seed) {
    std::vector<SensorSchema> schemas;
    std::vector<SensorStream> streams;
    for (const auto& s : src.sensors) {
        SensorStream stream;
        stream.schema = SensorSchema::load(s.schema, s.name);
        for (const auto& f : s.files) {
            auto events = ingest_sensor_csv(f, stream.schema);
            stream.events.insert(stream.events.end(), std::make_move_iterator(events.begin()),
                                 std::make_move_iterator(events.end()));
        }
        schemas.push_back(stream.schema);
        streams.push_back(std::move(stream));
    }
    validate_schema_set(schemas);
    auto samples = impute(assemble_samples(streams));
    Oracle oracle(read_labels(src.labels, src.label_column));

    std::vector<Sample> labeled;
    std::size_t dropped = 0;
    for (auto& s : samples) {
        if (oracle.has(s.key())) labeled.push_back(std::move(s));
        else ++dropped;
    }
    if (dropped) spdlog::warn("{} samples have no label and are left out of the pools", dropped);
    if (labeled.empty()) throw InsufficientDataError("no labeled samples in the CSV source");

    // seeded holdout split within each timestamp
    ExperimentData data;
    std::vector<Sample> pooled;
    std::size_t begin = 0;
    while (begin < labeled.size()) {
        std::size_t end = begin;
        while (end < labeled.size() && labeled[end].timestamp == labeled[begin].timestamp) ++end;
        const std::size_t n = end - begin;
        std::size_t h = static_cast<std::size_t>(std::llround(src.holdout_fraction * static_cast<double>(n)));
        h = std::min(h, n - 1);
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(labeled[begin].timestamp) ^ 0x401D0u));
        auto order = rng.sample_without_replacement(n, n);
        std::vector<char> held(n, 0);
        for (std::size_t k = 0; k < h; ++k) held[order[k]] = 1;
        for (std::size_t k = 0; k < n; ++k) {
            Sample& s = labeled[begin + k];
            if (held[k]) {
                data.test.features.append_row(s.features);
                data.test.labels.push_back(oracle.label(s));
                data.test.keys.push_back(s.key());
            } else {
                pooled.push_back(std::move(s));
            }
        }
        begin = end;
    }
    if (data.test.labels.empty()) throw InsufficientDataError("the holdout split is empty; add samples or raise holdout_fraction");
    data.pools = pools_by_timestamp(pooled);
    data.oracle = std::move(oracle);
    return data;
}

}  // namespace

ExperimentData load_experiment_data(const HarnessConfig& config, std::uint64_t seed) {
    if (config.synthetic()) {
        auto stream = synth_pool_stream(std::get<SynthConfig>(config.source), seed);
        return {std::move(stream.pools), std::move(stream.oracle), std::move(stream.holdout)};
    }
    return load_csv_data(std::get<CsvSource>(config.source), seed);
}

void resolve_against_data(HarnessConfig& config, const ExperimentData& data) {
    if (data.pools.empty()) throw InsufficientDataError("no pools");
    const int horizon = static_cast<int>(data.pools.size());
    std::size_t smallest = data.pools.front().size();
    for (const auto& p : data.pools) smallest = std::min(smallest, p.size());
    const auto& names_ptr = data.pools.front().samples.front().feature_names;
    const std::vector<std::string> names = names_ptr ? *names_ptr : std::vector<std::string>{};
    for (auto& e : config.experiments) {
        if (e.horizon == 0) {
            e.horizon = horizon;
            if (e.init_rounds > horizon) e.init_rounds = horizon;
            fill_checkpoints(e);
        }
        if (e.horizon != horizon)
            throw ConfigError("horizon", "experiment '" + e.name + "' expects " + std::to_string(e.horizon) +
                                             " rounds but the data has " + std::to_string(horizon));
        if (e.budget > smallest)
            throw ConfigError("budget", "experiment '" + e.name + "' budget " + std::to_string(e.budget) +
                                            " exceeds the smallest pool (" + std::to_string(smallest) + " samples)");
        const bool uses_pareto = e.init_strategy == StrategyName::pareto || e.select_strategy == StrategyName::pareto;
        if (uses_pareto && e.pareto_positive.empty() && e.pareto_negative.empty()) {
            if (!config.synthetic())
                throw ConfigError("pareto_positive", "experiment '" + e.name + "' needs a Pareto feature partition");
            const auto signs = synthetic_feature_signs(static_cast<int>(names.size()));
            for (std::size_t j = 0; j < names.size(); ++j)
                (signs[j] > 0 ? e.pareto_positive : e.pareto_negative).push_back(names[j]);
        }
        if (uses_pareto) ParetoSpec::from_names(e.pareto_positive, e.pareto_negative, names);
        e.validate();
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("failed writing " + path.string());
}

std::string opt_num(double v) { return std::isnan(v) ? "NA" : csv::format_double(v); }

std::string run_stem(const ExperimentConfig& cfg, const RunRecord& r, int repeats) {
    std::string stem = cfg.name + "_seed" + std::to_string(r.seed);
    if (repeats > 1) stem += "_rep" + std::to_string(r.repeat);
    return stem;
}

int repeats_of(const ExperimentConfig& c) {
    return c.select_strategy == StrategyName::random ? c.random_baseline_repeats : 1;
}

void write_outputs(const HarnessConfig& cfg, const Comparison& cmp) {
    const fs::path& dir = cfg.output;
    write_file(dir / "harness.yaml", serialize_harness_config(cfg));

    std::ostringstream runs;
    runs << "config,seed,repeat,run_seed,fingerprint,first_round,auc,log_auc,asd,wasd,ftc,final_mse,fallback_rounds,"
            "model_fingerprint\n";
    for (const auto& r : cmp.runs) {
        const auto& c = cmp.configs[r.config];
        const auto& rep = r.result.report;
        runs << c.name << ',' << r.seed << ',' << r.repeat << ',' << rep.seed << ',' << rep.config_fingerprint << ','
             << rep.first_round << ',' << opt_num(rep.auc) << ',' << opt_num(rep.log_auc) << ',' << opt_num(rep.asd)
             << ',' << opt_num(rep.wasd) << ',' << (rep.ftc ? std::to_string(*rep.ftc + rep.first_round - 1) : "never")
             << ',' << (rep.curve.empty() ? "NA" : csv::format_double(rep.curve.back())) << ','
             << r.result.fallback_rounds.size() << ',' << rep.model_fingerprint << '\n';

        std::ostringstream curve;
        curve << "round,mse\n";
        for (std::size_t i = 0; i < rep.curve.size(); ++i)
            curve << rep.first_round + static_cast<int>(i) << ',' << csv::format_double(rep.curve[i]) << '\n';
        const auto stem = run_stem(c, r, repeats_of(c));
        write_file(dir / "curves" / (stem + ".csv"), curve.str());

        std::ostringstream sched;
        sched << "round,case_id,timestamp,strategy\n";
        for (const auto& e : r.result.schedule)
            sched << e.round << ',' << csv::escape(e.case_id) << ',' << e.timestamp << ',' << e.strategy << '\n';
        write_file(dir / "schedules" / (stem + ".csv"), sched.str());
    }
    write_file(dir / "runs.csv", runs.str());

    std::ostringstream comp;
    comp << "config,init_strategy,init_rounds,select_strategy,runs,auc,log_auc,asd,wasd,ftc,ftc_never";
    std::set<int> cps;
    for (const auto& s : cmp.summaries)
        for (const auto& [round, _] : s.checkpoints) cps.insert(round);
    for (int cp : cps) comp << ",mse_" << cp;
    comp << ",significance\n";
    for (std::size_t i = 0; i < cmp.summaries.size(); ++i) {
        const auto& s = cmp.summaries[i];
        const auto& c = cmp.configs[i];
        std::size_t n = 0;
        for (const auto& r : cmp.runs) n += r.config == i;
        comp << s.name << ',' << to_string(c.init_strategy) << ',' << c.init_rounds << ',' << to_string(c.select_strategy)
             << ',' << n << ',' << opt_num(s.auc) << ',' << opt_num(s.log_auc) << ',' << opt_num(s.asd) << ','
             << opt_num(s.wasd) << ',' << opt_num(s.ftc) << ',' << s.ftc_never;
        for (int cp : cps) {
            double v = std::nan("");
            for (const auto& [round, mse] : s.checkpoints)
                if (round == cp) v = mse;
            comp << ',' << opt_num(v);
        }
        comp << ',' << (s.beats_random ? "*" : "") << '\n';
    }
    write_file(dir / "comparison.csv", comp.str());

    std::ostringstream pw;
    pw << "config_a,config_b,t_statistic,p_value,significant\n";
    for (const auto& p : cmp.pairwise)
        pw << cmp.configs[p.a].name << ',' << cmp.configs[p.b].name << ',' << opt_num(p.test.t_statistic) << ','
           << opt_num(p.test.p_value) << ',' << (p.test.significant ? "true" : "false") << '\n';
    write_file(dir / "pairwise.csv", pw.str());
}

void print_summary(std::ostream& out, const Comparison& cmp) {
    out << fmt::format("{:<24} {:>6} {:>12} {:>10} {:>10} {:>10} {:>8}  {}\n", "config", "runs", "auc", "logAUC", "asd",
                       "wasd", "ftc", "sig");
    for (std::size_t i = 0; i < cmp.summaries.size(); ++i) {
        const auto& s = cmp.summaries[i];
        std::size_t n = 0;
        for (const auto& r : cmp.runs) n += r.config == i;
        out << fmt::format("{:<24} {:>6} {:>12.4f} {:>10.4f} {:>10.4f} {:>10.4f} {:>8.2f}  {}\n", s.name, n, s.auc,
                           s.log_auc, s.asd, s.wasd, s.ftc, s.beats_random ? "*" : "");
    }
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "invalid configuration: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

HarnessConfig load_for_command(const fs::path& config_path, std::optional<std::uint64_t> seed) {
    HarnessConfig cfg = load_harness_config(config_path);
    if (seed) cfg.seeds = {*seed};
    return cfg;
}

}  // namespace

int cmd_run(const fs::path& config_path, const RunOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        HarnessConfig cfg = load_for_command(config_path, options.seed);
        if (options.output) cfg.output = *options.output;
        if (options.parallel) cfg.parallel = *options.parallel;
        cfg.validate();

        ExperimentData first = load_experiment_data(cfg, cfg.seeds.front());
        resolve_against_data(cfg, first);

        std::optional<ExperimentData> cached(std::move(first));
        const std::uint64_t first_seed = cfg.seeds.front();
        DataFactory factory = [&](std::uint64_t seed) {
            if (seed == first_seed && cached) {
                ExperimentData d = std::move(*cached);
                cached.reset();
                return d;
            }
            return load_experiment_data(cfg, seed);
        };
        std::vector<RunRecord> runs;
        try {
            runs = run_batch(factory, cfg.experiments, cfg.seeds, cfg.parallel);
        } catch (const ConfigError& e) {
            throw Error(e.what());
        }
        const Comparison cmp = summarize_runs(cfg.experiments, cfg.seeds, std::move(runs));
        write_outputs(cfg, cmp);
        print_summary(out, cmp);
        return static_cast<int>(kExitOk);
    });
}

int cmd_synth(const fs::path& config_path, const fs::path& out_dir, std::optional<std::uint64_t> seed,
              std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        HarnessConfig cfg = load_for_command(config_path, seed);
        if (!cfg.synthetic()) throw ConfigError("synthetic", "synth needs a synthetic data source");
        const auto& sc = std::get<SynthConfig>(cfg.source);
        const std::uint64_t s = cfg.seeds.front();
        const SyntheticStream stream = synth_pool_stream(sc, s);
        const auto& names = *stream.feature_names;

        std::string header = "event_id,case_id,timestamp";
        for (const auto& n : names) header += "," + n;
        std::ostringstream labels;
        labels << "case_id,timestamp,label\n";
        int width = static_cast<int>(std::to_string(sc.horizon).size());
        width = std::max(width, 3);
        for (const auto& pool : stream.pools) {
            std::ostringstream os;
            os << header << '\n';
            for (const auto& smp : pool.samples) {
                os << "e-" << smp.case_id << ',' << smp.case_id << ',' << smp.timestamp;
                for (double v : smp.features) os << ',' << csv::format_double(v);
                os << '\n';
                labels << smp.case_id << ',' << smp.timestamp << ','
                       << csv::format_double(stream.oracle.label(smp)) << '\n';
            }
            write_file(out_dir / fmt::format("pool_{:0{}}.csv", pool.round, width), os.str());
        }
        write_file(out_dir / "labels.csv", labels.str());

        std::ostringstream hold;
        hold << "case_id,timestamp";
        for (const auto& n : names) hold << ',' << n;
        hold << ",label\n";
        for (std::size_t i = 0; i < stream.holdout.labels.size(); ++i) {
            hold << stream.holdout.keys[i].case_id << ',' << stream.holdout.keys[i].timestamp;
            for (double v : stream.holdout.features.row(i)) hold << ',' << csv::format_double(v);
            hold << ',' << csv::format_double(stream.holdout.labels[i]) << '\n';
        }
        write_file(out_dir / "holdout.csv", hold.str());

        std::ostringstream schema;
        for (const auto& n : names) schema << n << (n == "gyn" ? ":binary" : ":numeric") << '\n';
        write_file(out_dir / "synth.schema", schema.str());

        out << "wrote " << stream.pools.size() << " pools of " << sc.pool_size << " samples, "
            << stream.holdout.labels.size() << " holdout samples to " << out_dir.string() << '\n';
        return static_cast<int>(kExitOk);
    });
}

int cmd_importance(const fs::path& run_dir, int repeats, const std::optional<std::string>& experiment,
                   std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const fs::path cfg_path = run_dir / "harness.yaml";
        if (!fs::exists(cfg_path) || !fs::exists(run_dir / "runs.csv")) {
            err << "error: " << run_dir.string() << " is not a completed run directory (harness.yaml or runs.csv missing)\n";
            return static_cast<int>(kExitFailure);
        }
        if (repeats < 1) throw ConfigError("repeats", "must be at least 1");
        HarnessConfig cfg;
        try {
            cfg = load_harness_config(cfg_path);
        } catch (const ConfigError& e) {
            throw Error(std::string("corrupt run artifact: ") + e.what());
        }
        const std::uint64_t data_seed = seed.value_or(cfg.seeds.front());
        if (std::find(cfg.seeds.begin(), cfg.seeds.end(), data_seed) == cfg.seeds.end())
            throw ConfigError("seed", "seed " + std::to_string(data_seed) + " is not part of the run");
        const ExperimentConfig* chosen = &cfg.experiments.front();
        if (experiment) {
            auto it = std::find_if(cfg.experiments.begin(), cfg.experiments.end(),
                                   [&](const ExperimentConfig& e) { return e.name == *experiment; });
            if (it == cfg.experiments.end()) throw ConfigError("experiment", "no experiment named '" + *experiment + "'");
            chosen = &*it;
        }
        ExperimentData data = load_experiment_data(cfg, data_seed);
        ExperimentConfig run_cfg = *chosen;
        run_cfg.seed = run_seed(run_cfg, data_seed, 0);
        const RunResult result = run_experiment(data.pools, data.oracle, data.test, run_cfg);
        if (!result.model) throw InsufficientDataError("the run produced no model");
        const auto& names_ptr = data.pools.front().samples.front().feature_names;
        const auto ranking = permutation_importance(*result.model, data.test.features, data.test.labels, repeats,
                                                    mix_seed(data_seed, 0x1A), names_ptr ? *names_ptr : std::vector<std::string>{});

        std::ostringstream csv_out;
        csv_out << "rank,feature,mean_mse_increase,sd_mse_increase\n";
        out << fmt::format("{:>4}  {:<20} {:>14} {:>12}\n", "rank", "feature", "mse_increase", "sd");
        for (std::size_t i = 0; i < ranking.size(); ++i) {
            const auto& f = ranking[i];
            csv_out << i + 1 << ',' << csv::escape(f.name) << ',' << csv::format_double(f.mean_increase) << ','
                    << csv::format_double(f.sd_increase) << '\n';
            out << fmt::format("{:>4}  {:<20} {:>14.4f} {:>12.4f}\n", i + 1, f.name, f.mean_increase, f.sd_increase);
        }
        const std::string stem = "importance_" + run_cfg.name + "_seed" + std::to_string(data_seed);
        write_file(run_dir / (stem + ".csv"), csv_out.str());
        return static_cast<int>(kExitOk);
    });
}

}  // namespace alsched
