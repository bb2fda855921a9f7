#pragma once

// Sensor / event / sample model, CSV ingestion, imputation and synthetic
// pool streams.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "alsched/common.hpp"

namespace alsched {

enum class AttributeKind { numeric, binary, categorical };

std::string to_string(AttributeKind kind);
AttributeKind parse_attribute_kind(std::string_view text);

struct Interval {
    double lo;
    double hi;
    bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

struct AttributeSpec {
    std::string name;
    AttributeKind kind = AttributeKind::numeric;
    std::optional<Interval> interval;     // numeric only
    std::vector<std::string> categories;  // categorical only; empty = learn from data

    /// Parses `name:kind`, `name:numeric[lo,hi]` or `name:categorical{a|b|c}`.
    static AttributeSpec parse(std::string_view text);
    std::string to_text() const;
};

struct SensorSchema {
    std::string sensor_name;
    std::vector<AttributeSpec> attributes;

    /// Throws SchemaError on duplicate attribute names or empty intervals.
    void validate() const;
    const AttributeSpec* find(std::string_view attribute) const;

    /// One attribute per non-empty, non-`#` line, in AttributeSpec::parse syntax.
    static SensorSchema load(const std::filesystem::path& path, std::string sensor_name);
};

/// Throws SchemaError if two schemas share a sensor name.
void validate_schema_set(const std::vector<SensorSchema>& schemas);

/// std::monostate marks a missing value.
using CellValue = std::variant<std::monostate, double, std::string>;

struct SensorEvent {
    std::string event_id;
    std::string case_id;
    std::int64_t timestamp = 0;
    std::map<std::string, CellValue> values;

    bool is_missing(const std::string& attribute) const;
    std::size_t missing_count() const;
};

using FeatureNames = std::shared_ptr<const std::vector<std::string>>;

struct SampleKey {
    std::string case_id;
    std::int64_t timestamp = 0;
    auto operator<=>(const SampleKey&) const = default;
};

/// x_{c,t}: one case at one time point. NaN entries are missing until imputed.
struct Sample {
    std::string case_id;
    std::int64_t timestamp = 0;
    std::vector<double> features;
    FeatureNames feature_names;

    SampleKey key() const { return {case_id, timestamp}; }
    std::size_t dim() const noexcept { return features.size(); }
    bool complete() const;
};

/// P_t: the samples offered for labeling at round t (1-based).
struct Pool {
    int round = 1;
    std::vector<Sample> samples;

    std::size_t size() const noexcept { return samples.size(); }
    std::size_t dim() const;
    Matrix features() const;
    /// Throws Error if empty or of mixed dimension.
    void validate() const;
};

/// Checks that rounds are 1..T without gaps and feature names are shared.
void validate_stream(const std::vector<Pool>& stream);

struct LabeledSample {
    Sample sample;
    double label = 0.0;
    int round = 0;
};

/// (X_t, Y_t). Append-only; rejects duplicate (case_id, timestamp) keys.
class LabeledSet {
public:
    void add(Sample sample, double label, int round);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    bool contains(const SampleKey& key) const { return keys_.count(key) != 0; }
    const std::vector<LabeledSample>& entries() const noexcept { return entries_; }

    Matrix features() const;
    std::vector<double> labels() const;

private:
    std::vector<LabeledSample> entries_;
    std::map<SampleKey, std::size_t> keys_;
};

/// The labeling process: a lookup from sample key to label value.
class Oracle {
public:
    Oracle() = default;
    explicit Oracle(std::map<SampleKey, double> labels) : labels_(std::move(labels)) {}

    double label(const Sample& sample) const;
    bool has(const SampleKey& key) const { return labels_.count(key) != 0; }
    void set(SampleKey key, double value) { labels_[std::move(key)] = value; }
    const std::map<SampleKey, double>& labels() const noexcept { return labels_; }

private:
    std::map<SampleKey, double> labels_;
};

/// Held-out evaluation samples, never offered in any pool.
struct TestSet {
    Matrix features;
    std::vector<double> labels;
    std::vector<SampleKey> keys;
};

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

/// Reads one sensor's CSV stream. Malformed or out-of-domain cells are
/// recorded as missing; a missing mandatory column raises SchemaError; an
/// unparseable timestamp raises RowError with the line number.
std::vector<SensorEvent> ingest_sensor_csv(const std::filesystem::path& path, const SensorSchema& schema);

struct SensorStream {
    SensorSchema schema;
    std::vector<SensorEvent> events;
};

/// Joins sensor streams into samples keyed by (case_id, timestamp), ordered
/// by timestamp then case_id. Binary attributes encode to {0,1}; categorical
/// ones one-hot in lexicographic category order. Absent sensors leave NaN.
std::vector<Sample> assemble_samples(const std::vector<SensorStream>& streams);

/// Fills each NaN with the latest earlier observed value of the same case and
/// feature, falling back to the feature's global mean of observed values.
std::vector<Sample> impute(const std::vector<Sample>& samples);

/// Splits samples into pools by distinct timestamp (ascending, rounds 1..T).
std::vector<Pool> pools_by_timestamp(const std::vector<Sample>& samples);

// ---------------------------------------------------------------------------
// Synthetic streams
// ---------------------------------------------------------------------------

struct SynthConfig {
    int horizon = 100;        // T
    int pool_size = 500;      // n
    int dim = 10;             // d
    double noise = 2.5;       // label noise standard deviation
    double drift = 0.3;       // per-round mean shift, in feature standard deviations
    double drift_fraction = 0.3;  // share of features shifted each round
    double holdout_fraction = 0.2;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

struct SyntheticStream {
    std::vector<Pool> pools;
    TestSet holdout;
    Oracle oracle;
    FeatureNames feature_names;
};

/// Feature names of the synthetic generator for dimension d.
std::vector<std::string> synthetic_feature_names(int dim);

/// Expected sign of each synthetic feature's effect on the label (+1 / -1),
/// used to build the default Pareto partition.
std::vector<int> synthetic_feature_signs(int dim);

SyntheticStream synth_pool_stream(const SynthConfig& config, std::uint64_t seed);

/// Draws `count` labels from the undrifted synthetic distribution.
std::vector<double> synth_label_draws(const SynthConfig& config, std::uint64_t seed, std::size_t count);

/// Target moments of the default label distribution (curd firmness).
inline constexpr double kLabelMean = 10.55;
inline constexpr double kLabelSd = 7.89;

}  // namespace alsched
