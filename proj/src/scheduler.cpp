#include "alsched/scheduler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

namespace alsched {

void ExperimentConfig::validate() const {
    if (name.empty()) throw ConfigError("name", "must not be empty");
    if (horizon < 1) throw ConfigError("horizon", "must be at least 1");
    if (budget < 1) throw ConfigError("budget", "must be at least 1");
    if (init_rounds < 0 || init_rounds > horizon)
        throw ConfigError("init_rounds", "must lie in [0, horizon]");
    if (!is_initialization_strategy(init_strategy))
        throw ConfigError("init_strategy", "'" + to_string(init_strategy) + "' needs a model; use random, pareto, di or cl");
    if (committee_size < 1) throw ConfigError("committee_size", "must be at least 1");
    if (!(emcm_learning_rate > 0.0)) throw ConfigError("emcm_learning_rate", "must be positive");
    if (udi_bins < 2) throw ConfigError("udi_bins", "must be at least 2");
    if (ucl_clusters < 1) throw ConfigError("ucl_clusters", "must be at least 1");
    if (ucl_top_clusters < 1 || ucl_top_clusters > ucl_clusters)
        throw ConfigError("ucl_top_clusters", "must lie in [1, ucl_clusters]");
    if (cl_clusters < 1) throw ConfigError("cl_clusters", "must be at least 1");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
    for (int c : checkpoints)
        if (c < 1 || c > horizon) throw ConfigError("checkpoints", "round " + std::to_string(c) + " outside [1, horizon]");
    if (random_baseline_repeats < 1) throw ConfigError("random_baseline_repeats", "must be at least 1");
    const auto& p = regressor_params;
    if (p.ridge_lambda < 0 || p.lasso_lambda < 0) throw ConfigError("regressor", "penalties must be non-negative");
    if (p.knn_k < 1) throw ConfigError("knn_k", "must be at least 1");
    if (p.forest_trees < 1) throw ConfigError("forest_trees", "must be at least 1");
    if (p.boost_stages < 1) throw ConfigError("boost_stages", "must be at least 1");
    if (p.tree_max_depth < 1 || p.boost_depth < 1) throw ConfigError("tree_max_depth", "must be at least 1");
    if (p.tree_min_leaf < 1 || p.boost_min_leaf < 1) throw ConfigError("tree_min_leaf", "must be at least 1");
    const bool uses_pareto = init_strategy == StrategyName::pareto || select_strategy == StrategyName::pareto;
    if (uses_pareto && pareto_positive.empty() && pareto_negative.empty())
        throw ConfigError("pareto_positive", "pareto selection needs the positive/negative feature partition");
}

namespace {

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    const auto& p = regressor_params;
    os << "name = " << name << "\nhorizon = " << horizon << "\nbudget = " << budget << "\ninit_rounds = " << init_rounds
       << "\ninit_strategy = " << to_string(init_strategy) << "\nselect_strategy = " << to_string(select_strategy)
       << "\nregressor = " << to_string(regressor) << "\nridge_lambda = " << num(p.ridge_lambda)
       << "\nlasso_lambda = " << num(p.lasso_lambda) << "\nknn_k = " << p.knn_k << "\ntree_max_depth = " << p.tree_max_depth
       << "\ntree_min_leaf = " << p.tree_min_leaf << "\nforest_trees = " << p.forest_trees
       << "\nforest_max_features = " << p.forest_max_features << "\nboost_stages = " << p.boost_stages
       << "\nboost_depth = " << p.boost_depth << "\nboost_learning_rate = " << num(p.boost_learning_rate)
       << "\ncommittee_size = " << committee_size << "\nemcm_learning_rate = " << num(emcm_learning_rate)
       << "\nudi_bins = " << udi_bins
       << "\nudi_binning = " << (udi_binning == Binning::equal_width ? "equal_width" : "equal_frequency")
       << "\nucl_clusters = " << ucl_clusters << "\nucl_top_clusters = " << ucl_top_clusters
       << "\ncl_clusters = " << cl_clusters << "\npr_sequential = " << (pr_sequential ? "true" : "false")
       << "\npareto_positive = " << join(pareto_positive) << "\npareto_negative = " << join(pareto_negative)
       << "\nepsilon = " << num(epsilon) << "\ncheckpoints = ";
    for (std::size_t i = 0; i < checkpoints.size(); ++i) os << (i ? "," : "") << checkpoints[i];
    os << "\nrandom_baseline_repeats = " << random_baseline_repeats
       << "\nfit_every_round = " << (fit_every_round ? "true" : "false") << "\n";
    return os.str();
}

std::string ExperimentConfig::fingerprint() const {
    return alsched::fingerprint(to_text() + "seed = " + std::to_string(seed) + "\n");
}

StrategyConfig ExperimentConfig::strategy_config(const std::vector<std::string>& feature_names) const {
    StrategyConfig s;
    if (!pareto_positive.empty() || !pareto_negative.empty())
        s.pareto = ParetoSpec::from_names(pareto_positive, pareto_negative, feature_names);
    s.cl_clusters = cl_clusters;
    s.pr_sequential = pr_sequential;
    s.udi.bins = udi_bins;
    s.udi.binning = udi_binning;
    s.udi.surrogate = regressor_params;
    s.ucl.clusters = ucl_clusters;
    s.ucl.top_clusters = ucl_top_clusters;
    s.qbc.base_kind = regressor;
    s.qbc.size = committee_size;
    s.qbc.params = regressor_params;
    s.emcm.learning_rate = emcm_learning_rate;
    s.emcm.committee = s.qbc;
    return s;
}

RunResult run_experiment(const std::vector<Pool>& stream, const Oracle& oracle, const TestSet& test,
                         const ExperimentConfig& cfg) {
    cfg.validate();
    if (stream.size() != static_cast<std::size_t>(cfg.horizon))
        throw ConfigError("horizon", "stream has " + std::to_string(stream.size()) + " pools, expected " +
                                         std::to_string(cfg.horizon));
    validate_stream(stream);
    if (test.labels.empty()) throw InsufficientDataError("empty holdout set");
    if (test.features.cols() != stream.front().dim()) throw DimensionError(stream.front().dim(), test.features.cols());
    for (const auto& key : test.keys)
        for (const auto& pool : stream)
            if (key.timestamp == pool.samples.front().timestamp)
                for (const auto& s : pool.samples)
                    if (s.key() == key) throw Error("holdout sample " + key.case_id + " also appears in a pool");

    const auto& names = stream.front().samples.front().feature_names;
    const StrategyConfig scfg = cfg.strategy_config(names ? *names : std::vector<std::string>{});

    RunResult result;
    LabeledSet labeled;
    RegressorPtr model;
    std::vector<double> curve;
    int first_round = 0;
    const std::string fp = cfg.fingerprint();

    for (int t = 1; t <= cfg.horizon; ++t) {
        const Pool& pool = stream[static_cast<std::size_t>(t - 1)];
        if (cfg.budget > pool.size())
            throw BudgetError("budget " + std::to_string(cfg.budget) + " exceeds the " + std::to_string(pool.size()) +
                              " samples of pool " + std::to_string(t));
        const StrategyName name = t <= cfg.init_rounds ? cfg.init_strategy : cfg.select_strategy;
        SelectionRequest req{pool, labeled, model, cfg.budget, mix_seed(cfg.seed, static_cast<std::uint64_t>(t))};
        std::vector<std::size_t> picks;
        std::string used = to_string(name);
        try {
            picks = select(name, req, scfg);
        } catch (const StrategyUnavailable& e) {
            spdlog::warn("[{}] round {}: {}; falling back to random selection", cfg.name, t, e.what());
            picks = select_random(req);
            used = "random";
            result.fallback_rounds.push_back(t);
        }
        for (auto i : picks) {
            const Sample& s = pool.samples[i];
            labeled.add(s, oracle.label(s), t);
            result.schedule.push_back({t, s.case_id, s.timestamp, used});
        }
        result.labeled_sizes.push_back(labeled.size());

        const bool fit_now = cfg.fit_every_round || t >= std::max(cfg.init_rounds, 1);
        if (fit_now && labeled.size() >= 2) {
            model = fit_regressor(cfg.regressor, cfg.regressor_params, labeled.features(), labeled.labels(),
                                  mix_seed(cfg.seed, 0x10000u + static_cast<std::uint64_t>(t)));
            if (first_round == 0) first_round = t;
            curve.push_back(mse(test.labels, model->predict(test.features)));
            spdlog::debug("[{}] round {}: |X|={} mse={:.4f}", cfg.name, t, labeled.size(), curve.back());
        }
    }

    result.report = RunReport::from_curve(std::move(curve), cfg.epsilon);
    result.report.first_round = first_round == 0 ? cfg.horizon + 1 : first_round;
    result.report.config_name = cfg.name;
    result.report.config_fingerprint = fp;
    result.report.seed = cfg.seed;
    result.report.model_fingerprint = model ? fingerprint(model->to_json().dump()) : "none";
    result.model = model;
    result.test = test;
    return result;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

namespace {

struct Job {
    std::size_t config;
    std::size_t seed_index;
    int repeat;
};

int repeats_of(const ExperimentConfig& c) {
    return c.select_strategy == StrategyName::random ? c.random_baseline_repeats : 1;
}

std::vector<double> curve_on_rounds(const RunReport& r, int from, int to) {
    std::vector<double> out;
    for (int t = from; t <= to; ++t) out.push_back(r.mse_at(t));
    return out;
}

}  // namespace

std::uint64_t run_seed(const ExperimentConfig& config, std::uint64_t seed, int repeat) {
    return repeats_of(config) > 1 ? mix_seed(seed, static_cast<std::uint64_t>(repeat) + 1) : seed;
}

std::vector<RunRecord> run_batch(const DataFactory& data, const std::vector<ExperimentConfig>& configs,
                                 const std::vector<std::uint64_t>& seeds, int parallel) {
    if (configs.empty()) throw ConfigError("experiments", "at least one configuration is required");
    if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
    for (const auto& c : configs) {
        c.validate();
        if (c.horizon != configs.front().horizon)
            throw ConfigError("horizon", "configurations '" + configs.front().name + "' and '" + c.name +
                                             "' have different horizons");
    }
    for (std::size_t i = 0; i < configs.size(); ++i)
        for (std::size_t j = i + 1; j < configs.size(); ++j)
            if (configs[i].name == configs[j].name)
                throw ConfigError("name", "duplicate experiment name '" + configs[i].name + "'");

    std::vector<ExperimentData> datasets;
    for (auto s : seeds) datasets.push_back(data(s));

    std::vector<Job> jobs;
    for (std::size_t c = 0; c < configs.size(); ++c)
        for (std::size_t s = 0; s < seeds.size(); ++s)
            for (int r = 0; r < repeats_of(configs[c]); ++r) jobs.push_back({c, s, r});

    std::vector<RunRecord> runs(jobs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size() && !failed; j = next++) {
            const Job& job = jobs[j];
            ExperimentConfig cfg = configs[job.config];
            const std::uint64_t seed = seeds[job.seed_index];
            cfg.seed = run_seed(cfg, seed, job.repeat);
            try {
                const auto& d = datasets[job.seed_index];
                runs[j] = {job.config, seed, job.repeat, run_experiment(d.pools, d.oracle, d.test, cfg)};
                spdlog::info("finished {} seed {} repeat {}: logAUC {:.4f}", cfg.name, seed, job.repeat,
                             runs[j].result.report.log_auc);
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::make_exception_ptr(Error("run '" + cfg.name + "' seed " + std::to_string(seed) +
                                                          " (fingerprint " + cfg.fingerprint() + ") failed: " + e.what()));
                failed = true;
            }
        }
    };
    const int threads = std::max(1, std::min<int>(parallel, static_cast<int>(jobs.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return runs;
}

Comparison run_comparison(const DataFactory& data, const std::vector<ExperimentConfig>& configs,
                          const std::vector<std::uint64_t>& seeds, int parallel, double alpha) {
    if (configs.size() < 2) throw ConfigError("experiments", "a comparison needs at least two configurations");
    return summarize_runs(configs, seeds, run_batch(data, configs, seeds, parallel), alpha);
}

Comparison summarize_runs(const std::vector<ExperimentConfig>& configs, const std::vector<std::uint64_t>& seeds,
                          std::vector<RunRecord> runs, double alpha) {
    Comparison out;
    out.configs = configs;
    out.seeds = seeds;
    out.runs = std::move(runs);

    // align every curve on the rounds all runs evaluated
    const int horizon = configs.front().horizon;
    int from = 1;
    for (const auto& r : out.runs) from = std::max(from, r.result.report.first_round);
    if (out.runs.empty()) throw InsufficientDataError("no runs to summarize");
    if (from > horizon) throw InsufficientDataError("no round has a fitted model in every run");

    const std::size_t n_rounds = static_cast<std::size_t>(horizon - from + 1);
    for (std::size_t c = 0; c < configs.size(); ++c) {
        ConfigSummary sum;
        sum.name = configs[c].name;
        sum.averaged_random = repeats_of(configs[c]) > 1;
        sum.mean_curve.assign(n_rounds, 0.0);
        std::vector<std::vector<double>> per_seed(seeds.size(), std::vector<double>(n_rounds, 0.0));
        std::size_t n_runs = 0, ftc_count = 0;
        for (const auto& r : out.runs) {
            if (r.config != c) continue;
            ++n_runs;
            const auto& rep = r.result.report;
            const auto curve = curve_on_rounds(rep, from, horizon);
            const std::size_t s = static_cast<std::size_t>(
                std::find(seeds.begin(), seeds.end(), r.seed) - seeds.begin());
            for (std::size_t t = 0; t < n_rounds; ++t) per_seed[s][t] += curve[t] / repeats_of(configs[c]);
            const auto aligned = RunReport::from_curve(curve, configs[c].epsilon);
            sum.auc += aligned.auc;
            sum.log_auc += aligned.log_auc;
            sum.asd += aligned.asd;
            sum.wasd += aligned.wasd;
            if (aligned.ftc) {
                sum.ftc += *aligned.ftc + from - 1;
                ++ftc_count;
            }
        }
        const double n = static_cast<double>(n_runs);
        sum.auc /= n;
        sum.log_auc /= n;
        sum.asd /= n;
        sum.wasd /= n;
        sum.ftc = ftc_count ? sum.ftc / static_cast<double>(ftc_count) : std::nan("");
        sum.ftc_never = static_cast<int>(n_runs - ftc_count);
        for (const auto& curve : per_seed)
            for (std::size_t t = 0; t < n_rounds; ++t) {
                sum.mean_curve[t] += curve[t] / static_cast<double>(seeds.size());
                sum.pooled_curve.push_back(curve[t]);
            }
        for (int cp : configs[c].checkpoints)
            sum.checkpoints.emplace_back(cp, cp >= from ? sum.mean_curve[static_cast<std::size_t>(cp - from)] : std::nan(""));
        out.summaries.push_back(std::move(sum));
    }

    const int m = std::max(1, static_cast<int>(configs.size() * (configs.size() - 1) / 2));
    for (std::size_t a = 0; a < configs.size(); ++a)
        for (std::size_t b = a + 1; b < configs.size(); ++b) {
            const bool enough = out.summaries[a].pooled_curve.size() >= 3;
            PairwiseTest pt{a, b, {}};
            if (enough) pt.test = paired_ttest_log(out.summaries[a].pooled_curve, out.summaries[b].pooled_curve, alpha, m);
            out.pairwise.push_back(pt);
        }
    for (const auto& pt : out.pairwise) {
        const bool ra = out.summaries[pt.a].averaged_random || configs[pt.a].select_strategy == StrategyName::random;
        const bool rb = out.summaries[pt.b].averaged_random || configs[pt.b].select_strategy == StrategyName::random;
        if (!pt.test.significant || ra == rb) continue;
        const std::size_t model = ra ? pt.b : pt.a;
        const std::size_t random = ra ? pt.a : pt.b;
        if (out.summaries[model].log_auc < out.summaries[random].log_auc) out.summaries[model].beats_random = true;
    }
    return out;
}

}  // namespace alsched
