#pragma once

// The data collection schedule: K model-free initialization rounds, then
// select -> label -> retrain for the remaining rounds, evaluating every fitted
// model on the holdout.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "alsched/data.hpp"
#include "alsched/metrics.hpp"
#include "alsched/regressors.hpp"
#include "alsched/strategies.hpp"

namespace alsched {

struct ExperimentConfig {
    std::string name = "experiment";
    int horizon = 100;            // T
    std::size_t budget = 8;       // b
    int init_rounds = 15;         // K
    StrategyName init_strategy = StrategyName::di;
    StrategyName select_strategy = StrategyName::qbc_boot;
    RegressorKind regressor = RegressorKind::random_forest;
    RegressorParams regressor_params;
    int committee_size = 10;
    double emcm_learning_rate = 0.01;
    int udi_bins = 5;
    Binning udi_binning = Binning::equal_frequency;
    std::size_t ucl_clusters = 20;
    std::size_t ucl_top_clusters = 5;
    std::size_t cl_clusters = 20;
    bool pr_sequential = true;
    std::vector<std::string> pareto_positive;  // feature names
    std::vector<std::string> pareto_negative;
    double epsilon = 0.01;
    std::vector<int> checkpoints{20, 50, 100};
    std::uint64_t seed = 0;
    int random_baseline_repeats = 15;
    bool fit_every_round = true;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    /// Canonical key = value listing; its fingerprint identifies the config.
    std::string to_text() const;
    std::string fingerprint() const;
    /// Strategy settings with committees built from the main regressor kind.
    StrategyConfig strategy_config(const std::vector<std::string>& feature_names) const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct ScheduleEntry {
    int round = 0;
    std::string case_id;
    std::int64_t timestamp = 0;
    std::string strategy;  // strategy that actually made the pick
};

struct RunResult {
    RunReport report;
    std::vector<ScheduleEntry> schedule;
    std::vector<std::size_t> labeled_sizes;  // |X_t| after each round
    std::vector<int> fallback_rounds;        // rounds that fell back to random selection
    RegressorPtr model;
    TestSet test;  // a copy of the holdout the run was scored on
};

/// Runs one experiment over a stream of exactly T pools. Strategies see the
/// pool, the labeled set and the previous model only.
RunResult run_experiment(const std::vector<Pool>& stream, const Oracle& oracle, const TestSet& test,
                         const ExperimentConfig& cfg);

/// Data for one seed: pools, oracle and holdout.
struct ExperimentData {
    std::vector<Pool> pools;
    Oracle oracle;
    TestSet test;
};
using DataFactory = std::function<ExperimentData(std::uint64_t seed)>;

struct ConfigSummary {
    std::string name;
    bool averaged_random = false;          // random selection averaged over repeats
    std::vector<double> mean_curve;        // per round, over seeds
    std::vector<double> pooled_curve;      // per-seed curves concatenated
    double auc = 0.0;                      // means over seeds
    double log_auc = 0.0;
    double asd = 0.0;
    double wasd = 0.0;
    double ftc = 0.0;                      // mean over seeds that converged
    int ftc_never = 0;                     // seeds that never converged
    std::vector<std::pair<int, double>> checkpoints;  // (round, mean MSE)
    bool beats_random = false;             // significant and lower logAUC than a random config
};

struct PairwiseTest {
    std::size_t a = 0;
    std::size_t b = 0;
    TTestResult test;
};

struct RunRecord {
    std::size_t config = 0;
    std::uint64_t seed = 0;
    int repeat = 0;
    RunResult result;
};

struct Comparison {
    std::vector<ExperimentConfig> configs;
    std::vector<std::uint64_t> seeds;
    std::vector<ConfigSummary> summaries;
    std::vector<PairwiseTest> pairwise;
    std::vector<RunRecord> runs;  // ordered by (config, seed, repeat)
};

/// Runs every (config, seed) pair; random-selection configs are repeated
/// random_baseline_repeats times per seed. Runs are spread over `parallel`
/// threads; the result order is (config, seed, repeat) regardless of
/// completion order. A failing run is rethrown as Error naming its fingerprint.
std::vector<RunRecord> run_batch(const DataFactory& data, const std::vector<ExperimentConfig>& configs,
                                 const std::vector<std::uint64_t>& seeds, int parallel = 1);

/// Per-config summaries over seeds (random configs averaged over repeats)
/// and pairwise paired t-tests on the per-seed curves concatenated, with a
/// Bonferroni factor equal to the number of pairs.
Comparison summarize_runs(const std::vector<ExperimentConfig>& configs, const std::vector<std::uint64_t>& seeds,
                          std::vector<RunRecord> runs, double alpha = 0.05);

/// run_batch + summarize_runs; needs at least two configs with equal horizons.
Comparison run_comparison(const DataFactory& data, const std::vector<ExperimentConfig>& configs,
                          const std::vector<std::uint64_t>& seeds, int parallel = 1, double alpha = 0.05);

/// Seed a run actually uses: the data seed itself, or a per-repeat
/// derivation for repeated random baselines.
std::uint64_t run_seed(const ExperimentConfig& config, std::uint64_t seed, int repeat);

}  // namespace alsched
