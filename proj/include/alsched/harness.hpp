#pragma once

// Harness configuration (YAML), data preparation and the run / synth /
// importance commands behind the CLI.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "alsched/data.hpp"
#include "alsched/scheduler.hpp"

namespace alsched {

struct SensorSource {
    std::string name;
    std::vector<std::filesystem::path> files;  // concatenated in order
    std::filesystem::path schema;

    friend bool operator==(const SensorSource&, const SensorSource&) = default;
};

struct CsvSource {
    std::vector<SensorSource> sensors;
    std::filesystem::path labels;  // columns: case_id, timestamp, <label_column>
    std::string label_column = "label";
    double holdout_fraction = 0.2;

    friend bool operator==(const CsvSource&, const CsvSource&) = default;
};

struct HarnessConfig {
    std::variant<SynthConfig, CsvSource> source = SynthConfig{};
    std::vector<ExperimentConfig> experiments;
    std::filesystem::path output = "alsched-out";
    int parallel = 1;
    std::vector<std::uint64_t> seeds{0};

    /// Throws ConfigError naming the offending field.
    void validate() const;
    bool synthetic() const { return std::holds_alternative<SynthConfig>(source); }

    friend bool operator==(const HarnessConfig&, const HarnessConfig&) = default;
};

/// Parses YAML text. Relative paths are resolved against `base_dir`.
/// Experiments left out entirely default to the flagship comparison
/// (Di-15 + qbc_boot, Di-15 + emcm_boot, Di-15 + random).
HarnessConfig parse_harness_config(const std::string& text, const std::filesystem::path& base_dir = {});
HarnessConfig load_harness_config(const std::filesystem::path& path);
/// Complete YAML rendering; parsing it yields the same HarnessConfig.
std::string serialize_harness_config(const HarnessConfig& config);

std::vector<ExperimentConfig> flagship_experiments();

/// Builds the data of one seed. CSV sources split a seeded holdout share of
/// each timestamp's samples off before pooling.
ExperimentData load_experiment_data(const HarnessConfig& config, std::uint64_t seed);

/// Fills data-dependent defaults (horizon for CSV sources, the synthetic
/// Pareto partition) and checks budgets against the pools. Throws ConfigError.
void resolve_against_data(HarnessConfig& config, const ExperimentData& data);

/// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2 };

struct RunOptions {
    std::optional<std::filesystem::path> output;
    std::optional<std::uint64_t> seed;  // replaces the seed list with this single seed
    std::optional<int> parallel;
};

int cmd_run(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_synth(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
              std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);
/// Replays one run of a finished run directory and ranks its features.
int cmd_importance(const std::filesystem::path& run_dir, int repeats, const std::optional<std::string>& experiment,
                   std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);

}  // namespace alsched
