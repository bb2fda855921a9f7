#include "alsched/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "csv.hpp"

namespace alsched {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::optional<double> parse_binary(std::string_view text) {
    const std::string v = lower(csv::trim(text));
    if (v == "1" || v == "true" || v == "yes") return 1.0;
    if (v == "0" || v == "false" || v == "no") return 0.0;
    return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

std::string to_string(AttributeKind kind) {
    switch (kind) {
        case AttributeKind::numeric: return "numeric";
        case AttributeKind::binary: return "binary";
        case AttributeKind::categorical: return "categorical";
    }
    return "numeric";
}

AttributeKind parse_attribute_kind(std::string_view text) {
    const std::string v = lower(csv::trim(text));
    if (v == "numeric") return AttributeKind::numeric;
    if (v == "binary") return AttributeKind::binary;
    if (v == "categorical") return AttributeKind::categorical;
    throw SchemaError("unknown attribute kind '" + std::string(text) + "'");
}

AttributeSpec AttributeSpec::parse(std::string_view text) {
    text = csv::trim(text);
    const auto colon = text.find(':');
    AttributeSpec spec;
    if (colon == std::string_view::npos) {
        spec.name = std::string(text);
        if (spec.name.empty()) throw SchemaError("empty attribute declaration");
        return spec;
    }
    spec.name = std::string(csv::trim(text.substr(0, colon)));
    std::string_view rest = csv::trim(text.substr(colon + 1));
    const auto open = rest.find_first_of("[{");
    spec.kind = parse_attribute_kind(rest.substr(0, open));
    if (spec.name.empty()) throw SchemaError("attribute without a name: '" + std::string(text) + "'");
    if (open == std::string_view::npos) return spec;

    const char closer = rest[open] == '[' ? ']' : '}';
    const auto close = rest.find(closer, open);
    if (close == std::string_view::npos) throw SchemaError("unterminated domain in '" + std::string(text) + "'");
    const std::string_view body = rest.substr(open + 1, close - open - 1);
    if (closer == ']') {
        if (spec.kind != AttributeKind::numeric)
            throw SchemaError("interval domain on non-numeric attribute '" + spec.name + "'");
        const auto comma = body.find(',');
        if (comma == std::string_view::npos) throw SchemaError("interval for '" + spec.name + "' needs lo,hi");
        auto lo = csv::parse_double(body.substr(0, comma));
        auto hi = csv::parse_double(body.substr(comma + 1));
        if (!lo || !hi) throw SchemaError("unparseable interval for '" + spec.name + "'");
        spec.interval = Interval{*lo, *hi};
    } else {
        if (spec.kind != AttributeKind::categorical)
            throw SchemaError("value set on non-categorical attribute '" + spec.name + "'");
        std::size_t start = 0;
        while (start <= body.size()) {
            const auto bar = body.find('|', start);
            const auto item = csv::trim(body.substr(start, bar == std::string_view::npos ? bar : bar - start));
            if (!item.empty()) spec.categories.emplace_back(item);
            if (bar == std::string_view::npos) break;
            start = bar + 1;
        }
        std::sort(spec.categories.begin(), spec.categories.end());
        spec.categories.erase(std::unique(spec.categories.begin(), spec.categories.end()), spec.categories.end());
    }
    return spec;
}

std::string AttributeSpec::to_text() const {
    std::string out = name + ":" + to_string(kind);
    if (interval) out += "[" + csv::format_double(interval->lo) + "," + csv::format_double(interval->hi) + "]";
    if (!categories.empty()) {
        out += "{";
        for (std::size_t i = 0; i < categories.size(); ++i) out += (i ? "|" : "") + categories[i];
        out += "}";
    }
    return out;
}

void SensorSchema::validate() const {
    if (sensor_name.empty()) throw SchemaError("sensor schema without a name");
    std::set<std::string> seen;
    for (const auto& a : attributes) {
        if (!seen.insert(a.name).second)
            throw SchemaError("duplicate attribute '" + a.name + "' in sensor '" + sensor_name + "'");
        if (a.name == "event_id" || a.name == "case_id" || a.name == "timestamp")
            throw SchemaError("attribute name '" + a.name + "' is reserved");
        if (a.interval && !(a.interval->lo <= a.interval->hi))
            throw SchemaError("empty domain interval for '" + sensor_name + "." + a.name + "'");
    }
}

const AttributeSpec* SensorSchema::find(std::string_view attribute) const {
    for (const auto& a : attributes)
        if (a.name == attribute) return &a;
    return nullptr;
}

SensorSchema SensorSchema::load(const std::filesystem::path& path, std::string sensor_name) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open schema file " + path.string());
    SensorSchema schema{std::move(sensor_name), {}};
    std::string line;
    while (std::getline(in, line)) {
        const auto t = csv::trim(line);
        if (t.empty() || t.front() == '#') continue;
        schema.attributes.push_back(AttributeSpec::parse(t));
    }
    schema.validate();
    return schema;
}

void validate_schema_set(const std::vector<SensorSchema>& schemas) {
    std::set<std::string> names;
    for (const auto& s : schemas) {
        s.validate();
        if (!names.insert(s.sensor_name).second) throw SchemaError("duplicate sensor '" + s.sensor_name + "'");
    }
}

// ---------------------------------------------------------------------------
// Events, samples, sets
// ---------------------------------------------------------------------------

bool SensorEvent::is_missing(const std::string& attribute) const {
    auto it = values.find(attribute);
    return it == values.end() || std::holds_alternative<std::monostate>(it->second);
}

std::size_t SensorEvent::missing_count() const {
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](const auto& kv) {
        return std::holds_alternative<std::monostate>(kv.second);
    }));
}

bool Sample::complete() const {
    return std::none_of(features.begin(), features.end(), [](double v) { return std::isnan(v); });
}

std::size_t Pool::dim() const { return samples.empty() ? 0 : samples.front().dim(); }

Matrix Pool::features() const {
    Matrix m(samples.size(), dim());
    for (std::size_t i = 0; i < samples.size(); ++i) std::copy(samples[i].features.begin(), samples[i].features.end(), m.row(i).begin());
    return m;
}

void Pool::validate() const {
    if (samples.empty()) throw Error("pool for round " + std::to_string(round) + " is empty");
    const std::size_t d = dim();
    for (const auto& s : samples)
        if (s.dim() != d) throw DimensionError(d, s.dim());
}

void validate_stream(const std::vector<Pool>& stream) {
    for (std::size_t i = 0; i < stream.size(); ++i) {
        stream[i].validate();
        if (stream[i].round != static_cast<int>(i) + 1)
            throw Error("pool rounds must be consecutive from 1; found round " + std::to_string(stream[i].round) +
                        " at position " + std::to_string(i + 1));
        const auto& names = stream[i].samples.front().feature_names;
        const auto& first = stream.front().samples.front().feature_names;
        if (names && first && *names != *first) throw Error("feature order differs in round " + std::to_string(i + 1));
    }
}

void LabeledSet::add(Sample sample, double label, int round) {
    if (!std::isfinite(label)) throw Error("label for case " + sample.case_id + " is not finite");
    if (!entries_.empty() && sample.dim() != entries_.front().sample.dim())
        throw DimensionError(entries_.front().sample.dim(), sample.dim());
    auto key = sample.key();
    if (keys_.count(key))
        throw ConflictError("sample (" + key.case_id + ", " + std::to_string(key.timestamp) + ") already labeled");
    keys_.emplace(std::move(key), entries_.size());
    entries_.push_back({std::move(sample), label, round});
}

Matrix LabeledSet::features() const {
    if (entries_.empty()) return {};
    Matrix m(entries_.size(), entries_.front().sample.dim());
    for (std::size_t i = 0; i < entries_.size(); ++i)
        std::copy(entries_[i].sample.features.begin(), entries_[i].sample.features.end(), m.row(i).begin());
    return m;
}

std::vector<double> LabeledSet::labels() const {
    std::vector<double> y;
    y.reserve(entries_.size());
    for (const auto& e : entries_) y.push_back(e.label);
    return y;
}

double Oracle::label(const Sample& sample) const {
    auto it = labels_.find(sample.key());
    if (it == labels_.end())
        throw Error("oracle has no label for (" + sample.case_id + ", " + std::to_string(sample.timestamp) + ")");
    return it->second;
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

std::vector<SensorEvent> ingest_sensor_csv(const std::filesystem::path& path, const SensorSchema& schema) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    const auto header = csv::split_line(line);
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column.emplace(std::string(csv::trim(header[i])), i);

    auto require = [&](const std::string& name) {
        auto it = column.find(name);
        if (it == column.end())
            throw SchemaError(path.string() + ": missing column '" + name + "' for sensor '" + schema.sensor_name + "'");
        return it->second;
    };
    const std::size_t id_col = require("event_id");
    const std::size_t case_col = require("case_id");
    const std::size_t ts_col = require("timestamp");
    std::vector<std::size_t> attr_cols;
    for (const auto& a : schema.attributes) attr_cols.push_back(require(a.name));

    std::vector<SensorEvent> events;
    std::set<std::string> ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        const auto cells = csv::split_line(line);
        if (cells.size() != header.size())
            throw RowError(line_no, "expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));

        SensorEvent ev;
        ev.event_id = std::string(csv::trim(cells[id_col]));
        ev.case_id = std::string(csv::trim(cells[case_col]));
        if (ev.event_id.empty()) throw RowError(line_no, "empty event_id");
        if (ev.case_id.empty()) throw RowError(line_no, "empty case_id");
        if (!ids.insert(ev.event_id).second) throw RowError(line_no, "duplicate event_id '" + ev.event_id + "'");
        auto ts = csv::parse_int(cells[ts_col]);
        if (!ts || *ts < 0) throw RowError(line_no, "unparseable timestamp '" + cells[ts_col] + "'");
        ev.timestamp = *ts;

        for (std::size_t k = 0; k < schema.attributes.size(); ++k) {
            const auto& spec = schema.attributes[k];
            const std::string& raw = cells[attr_cols[k]];
            CellValue value;
            if (!csv::is_missing_token(raw)) {
                switch (spec.kind) {
                    case AttributeKind::numeric:
                        if (auto v = csv::parse_double(raw); v && (!spec.interval || spec.interval->contains(*v))) value = *v;
                        break;
                    case AttributeKind::binary:
                        if (auto v = parse_binary(raw)) value = *v;
                        break;
                    case AttributeKind::categorical: {
                        std::string v(csv::trim(raw));
                        if (spec.categories.empty() ||
                            std::binary_search(spec.categories.begin(), spec.categories.end(), v))
                            value = std::move(v);
                        break;
                    }
                }
            }
            ev.values.emplace(spec.name, std::move(value));
        }
        events.push_back(std::move(ev));
    }
    return events;
}

std::vector<Sample> assemble_samples(const std::vector<SensorStream>& streams) {
    std::vector<SensorSchema> schemas;
    for (const auto& s : streams) schemas.push_back(s.schema);
    validate_schema_set(schemas);

    struct Slot {
        std::size_t offset;
        std::vector<std::string> categories;
    };
    auto names = std::make_shared<std::vector<std::string>>();
    std::vector<std::vector<Slot>> layout(streams.size());
    for (std::size_t s = 0; s < streams.size(); ++s) {
        const auto& schema = streams[s].schema;
        for (const auto& attr : schema.attributes) {
            Slot slot{names->size(), {}};
            const std::string base = schema.sensor_name + "." + attr.name;
            if (attr.kind == AttributeKind::categorical) {
                std::set<std::string> cats(attr.categories.begin(), attr.categories.end());
                if (cats.empty())
                    for (const auto& ev : streams[s].events)
                        if (auto it = ev.values.find(attr.name); it != ev.values.end())
                            if (auto* str = std::get_if<std::string>(&it->second)) cats.insert(*str);
                slot.categories.assign(cats.begin(), cats.end());
                for (const auto& c : slot.categories) names->push_back(base + "=" + c);
            } else {
                names->push_back(base);
            }
            layout[s].push_back(std::move(slot));
        }
    }

    std::map<std::pair<std::int64_t, std::string>, Sample> by_key;
    for (std::size_t s = 0; s < streams.size(); ++s) {
        const auto& schema = streams[s].schema;
        std::map<SampleKey, const SensorEvent*> seen;
        for (const auto& ev : streams[s].events) {
            SampleKey key{ev.case_id, ev.timestamp};
            auto [it, inserted] = seen.emplace(key, &ev);
            if (!inserted)
                throw ConflictError("sensor '" + schema.sensor_name + "' has two events for (" + ev.case_id + ", " +
                                    std::to_string(ev.timestamp) + "): '" + it->second->event_id + "' and '" +
                                    ev.event_id + "'");
            auto& sample = by_key[{ev.timestamp, ev.case_id}];
            if (sample.features.empty()) {
                sample.case_id = ev.case_id;
                sample.timestamp = ev.timestamp;
                sample.features.assign(names->size(), kMissing);
                sample.feature_names = names;
            }
            for (std::size_t k = 0; k < schema.attributes.size(); ++k) {
                const auto& attr = schema.attributes[k];
                const auto& slot = layout[s][k];
                auto vit = ev.values.find(attr.name);
                if (vit == ev.values.end() || std::holds_alternative<std::monostate>(vit->second)) continue;
                if (attr.kind == AttributeKind::categorical) {
                    const auto& v = std::get<std::string>(vit->second);
                    for (std::size_t c = 0; c < slot.categories.size(); ++c)
                        sample.features[slot.offset + c] = slot.categories[c] == v ? 1.0 : 0.0;
                } else {
                    sample.features[slot.offset] = std::get<double>(vit->second);
                }
            }
        }
    }

    std::vector<Sample> out;
    out.reserve(by_key.size());
    for (auto& [key, sample] : by_key) out.push_back(std::move(sample));
    return out;
}

std::vector<Sample> impute(const std::vector<Sample>& samples) {
    if (samples.empty()) return {};
    const std::size_t d = samples.front().dim();
    std::vector<double> sum(d, 0.0);
    std::vector<std::size_t> count(d, 0);
    for (const auto& s : samples) {
        if (s.dim() != d) throw DimensionError(d, s.dim());
        for (std::size_t j = 0; j < d; ++j)
            if (!std::isnan(s.features[j])) {
                sum[j] += s.features[j];
                ++count[j];
            }
    }
    std::vector<double> mean(d);
    for (std::size_t j = 0; j < d; ++j) {
        if (count[j] == 0) {
            const auto& names = samples.front().feature_names;
            const std::string name = names && j < names->size() ? (*names)[j] : "#" + std::to_string(j);
            throw ImputationError("feature '" + name + "' is missing in every sample");
        }
        mean[j] = sum[j] / static_cast<double>(count[j]);
    }

    // chronological order per case; stable so equal timestamps keep input order
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (samples[a].case_id != samples[b].case_id) return samples[a].case_id < samples[b].case_id;
        return samples[a].timestamp < samples[b].timestamp;
    });

    std::vector<Sample> out = samples;
    std::vector<double> last(d, kMissing);
    const std::string* current_case = nullptr;
    for (std::size_t idx : order) {
        const Sample& src = samples[idx];
        if (!current_case || *current_case != src.case_id) {
            std::fill(last.begin(), last.end(), kMissing);
            current_case = &src.case_id;
        }
        for (std::size_t j = 0; j < d; ++j) {
            if (!std::isnan(src.features[j])) {
                last[j] = src.features[j];
            } else {
                out[idx].features[j] = std::isnan(last[j]) ? mean[j] : last[j];
            }
        }
    }
    return out;
}

std::vector<Pool> pools_by_timestamp(const std::vector<Sample>& samples) {
    std::map<std::int64_t, std::vector<Sample>> groups;
    for (const auto& s : samples) groups[s.timestamp].push_back(s);
    std::vector<Pool> pools;
    int round = 1;
    for (auto& [ts, group] : groups) pools.push_back(Pool{round++, std::move(group)});
    return pools;
}

// ---------------------------------------------------------------------------
// Synthetic streams
// ---------------------------------------------------------------------------

void SynthConfig::validate() const {
    if (horizon <= 0) throw ConfigError("horizon", "must be positive");
    if (pool_size <= 0) throw ConfigError("pool_size", "must be positive");
    if (dim <= 0) throw ConfigError("dim", "must be positive");
    if (!(noise >= 0.0) || !(noise < kLabelSd)) throw ConfigError("noise", "must lie in [0, label sd)");
    if (!(drift >= 0.0)) throw ConfigError("drift", "must be non-negative");
    if (!(drift_fraction >= 0.0 && drift_fraction <= 1.0)) throw ConfigError("drift_fraction", "must lie in [0, 1]");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
        throw ConfigError("holdout_fraction", "must lie in [0, 1)");
}

namespace {

enum class Dist { normal, uniform, integer, bernoulli };

struct FeatureModel {
    const char* name;
    Dist dist;
    double a;  // mean, lower bound, or probability
    double b;  // sd or upper bound
    double lo;
    double hi;
    int sign;

    double mean() const {
        switch (dist) {
            case Dist::normal: return a;
            case Dist::uniform:
            case Dist::integer: return 0.5 * (a + b);
            case Dist::bernoulli: return a;
        }
        return a;
    }
    double sd() const {
        switch (dist) {
            case Dist::normal: return b;
            case Dist::uniform: return (b - a) / std::sqrt(12.0);
            case Dist::integer: return std::sqrt(((b - a + 1) * (b - a + 1) - 1) / 12.0);
            case Dist::bernoulli: return std::sqrt(a * (1 - a));
        }
        return b;
    }
};

// Milk spectrometer and cow-status analogs.
constexpr FeatureModel kRoster[] = {
    {"fat", Dist::normal, 3.8, 0.6, 2.0, 6.5, -1},
    {"protein", Dist::normal, 3.3, 0.3, 2.5, 4.3, +1},
    {"lactose", Dist::normal, 4.8, 0.25, 4.0, 5.5, +1},
    {"igg", Dist::normal, 0.5, 0.15, 0.05, 1.2, -1},
    {"casein", Dist::uniform, 1.5, 3.0, 1.5, 3.0, +1},
    {"oa", Dist::normal, 1.0, 0.35, 0.0, 2.5, +1},
    {"sufa", Dist::normal, 2.5, 0.5, 1.0, 4.5, -1},
    {"mufa", Dist::normal, 1.0, 0.3, 0.2, 2.2, +1},
    {"dim", Dist::integer, 0.0, 305.0, 0.0, 305.0, -1},
    {"gyn", Dist::bernoulli, 0.4, 0.0, 0.0, 1.0, -1},
};
constexpr int kRosterSize = static_cast<int>(std::size(kRoster));

FeatureModel feature_model(int j) {
    if (j < kRosterSize) return kRoster[j];
    return {"aux", Dist::normal, 0.0, 1.0, -6.0, 6.0, +1};
}

double softplus(double v) { return v > 30 ? v : std::log1p(std::exp(v)); }

// Uncalibrated signal on standardized features; terms referencing features
// beyond the configured dimension vanish.
double raw_signal(std::span<const double> z) {
    auto f = [&](int j) { return j < static_cast<int>(z.size()) ? z[j] : 0.0; };
    const double fat = f(0), protein = f(1), lactose = f(2), igg = f(3), casein = f(4), oa = f(5), sufa = f(6),
                 mufa = f(7), dim = f(8), gyn = f(9);
    const double linear = 0.9 * casein + 0.8 * oa + 0.5 * protein + 0.3 * lactose + 0.25 * mufa - 0.4 * dim -
                          0.15 * fat - 0.1 * igg - 0.15 * sufa - 0.2 * gyn;
    const double interactions = 0.6 * casein * oa + 0.4 * mufa * protein;
    // curd firmness sets in sharply once the coagulation drivers pass a gel point
    const double coagulation = 3.0 * softplus(4.0 * (oa + casein - 1.5));
    return linear + interactions + coagulation;
}

double draw_feature(const FeatureModel& m, double shift_sd, Rng& rng) {
    double v = 0.0;
    switch (m.dist) {
        case Dist::normal: v = rng.normal(m.a, m.b); break;
        case Dist::uniform: v = rng.uniform(m.a, m.b); break;
        case Dist::integer: v = std::floor(rng.uniform(m.a, m.b + 1.0)); break;
        case Dist::bernoulli: return rng.uniform() < std::clamp(m.a + shift_sd * m.sd(), 0.0, 1.0) ? 1.0 : 0.0;
    }
    v += shift_sd * m.sd();
    if (m.dist == Dist::integer) v = std::round(v);
    return std::clamp(v, m.lo, m.hi);
}

struct Calibration {
    double mean;
    double sd;
};

std::vector<double> standardize(std::span<const double> raw) {
    std::vector<double> z(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) {
        const auto m = feature_model(static_cast<int>(j));
        z[j] = (raw[j] - m.mean()) / m.sd();
    }
    return z;
}

// Moments of the raw signal under the undrifted distribution; fixed seed so
// the label map is a function of the configuration alone.
Calibration calibrate_uncached(int dim) {
    Rng rng(0x5EEDCA11B4A7E000ULL + static_cast<std::uint64_t>(dim));
    constexpr int kDraws = 200000;
    std::vector<double> raw(dim);
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < kDraws; ++i) {
        for (int j = 0; j < dim; ++j) raw[j] = draw_feature(feature_model(j), 0.0, rng);
        const double g = raw_signal(standardize(raw));
        sum += g;
        sq += g * g;
    }
    const double mean = sum / kDraws;
    const double var = std::max(sq / kDraws - mean * mean, 1e-12);
    return {mean, std::sqrt(var)};
}

Calibration calibrate(int dim) {
    static std::mutex mutex;
    static std::map<int, Calibration> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(dim);
    if (it == cache.end()) it = cache.emplace(dim, calibrate_uncached(dim)).first;
    return it->second;
}

class LabelFunction {
public:
    explicit LabelFunction(const SynthConfig& cfg)
        : calib_(calibrate(cfg.dim)), signal_sd_(std::sqrt(kLabelSd * kLabelSd - cfg.noise * cfg.noise)), noise_(cfg.noise) {}

    double operator()(std::span<const double> raw, Rng& rng) const {
        const double g = (raw_signal(standardize(raw)) - calib_.mean) / calib_.sd;
        return kLabelMean + signal_sd_ * g + (noise_ > 0 ? rng.normal(0.0, noise_) : 0.0);
    }

private:
    Calibration calib_;
    double signal_sd_;
    double noise_;
};

}  // namespace

std::vector<std::string> synthetic_feature_names(int dim) {
    std::vector<std::string> names;
    for (int j = 0; j < dim; ++j)
        names.push_back(j < kRosterSize ? kRoster[j].name : "aux" + std::to_string(j - kRosterSize + 1));
    return names;
}

std::vector<int> synthetic_feature_signs(int dim) {
    std::vector<int> signs;
    for (int j = 0; j < dim; ++j) signs.push_back(feature_model(j).sign);
    return signs;
}

SyntheticStream synth_pool_stream(const SynthConfig& config, std::uint64_t seed) {
    config.validate();
    const int d = config.dim;
    const LabelFunction g(config);
    auto names = std::make_shared<const std::vector<std::string>>(synthetic_feature_names(d));

    const double f = config.holdout_fraction;
    const auto per_round_holdout = static_cast<int>(std::lround(config.pool_size * f / (1.0 - f)));

    SyntheticStream out;
    out.feature_names = names;
    out.holdout.features = Matrix(0, static_cast<std::size_t>(d));
    std::vector<double> raw(d);
    for (int t = 1; t <= config.horizon; ++t) {
        Rng drift_rng(mix_seed(seed, 2 * static_cast<std::uint64_t>(t)));
        std::vector<double> shift(d, 0.0);
        for (int j = 0; j < d; ++j)
            if (drift_rng.uniform() < config.drift_fraction) shift[j] = drift_rng.normal(0.0, config.drift);

        Rng rng(mix_seed(seed, 2 * static_cast<std::uint64_t>(t) + 1));
        Pool pool{t, {}};
        pool.samples.reserve(config.pool_size);
        for (int i = 0; i < config.pool_size + per_round_holdout; ++i) {
            for (int j = 0; j < d; ++j) raw[j] = draw_feature(feature_model(j), shift[j], rng);
            const double y = g(raw, rng);
            const bool held_out = i >= config.pool_size;
            Sample s{(held_out ? "h" : "r") + std::to_string(t) + "-" + std::to_string(held_out ? i - config.pool_size : i), t,
                     raw, names};
            out.oracle.set(s.key(), y);
            if (held_out) {
                out.holdout.features.append_row(s.features);
                out.holdout.labels.push_back(y);
                out.holdout.keys.push_back(s.key());
            } else {
                pool.samples.push_back(std::move(s));
            }
        }
        out.pools.push_back(std::move(pool));
    }
    return out;
}

std::vector<double> synth_label_draws(const SynthConfig& config, std::uint64_t seed, std::size_t count) {
    config.validate();
    const LabelFunction g(config);
    Rng rng(seed);
    std::vector<double> raw(config.dim);
    std::vector<double> labels;
    labels.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        for (int j = 0; j < config.dim; ++j) raw[j] = draw_feature(feature_model(j), 0.0, rng);
        labels.push_back(g(raw, rng));
    }
    return labels;
}

}  // namespace alsched
