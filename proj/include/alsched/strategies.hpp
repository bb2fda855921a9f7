#pragma once

// Sample selection strategies. Every strategy maps a SelectionRequest to b
// distinct pool indices, in selection order. Strategies see only the pool,
// the labeled set and the current model; the holdout is out of reach.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alsched/clustering.hpp"
#include "alsched/data.hpp"
#include "alsched/regressors.hpp"

namespace alsched {

struct SelectionRequest {
    const Pool& pool;             // P_t
    const LabeledSet& labeled;    // (X_{t-1}, Y_{t-1})
    RegressorPtr model;           // f_{t-1}; null during initialization
    std::size_t budget = 1;       // b
    std::uint64_t seed = 0;

    /// Throws BudgetError unless 1 <= b <= |pool|.
    void validate() const;
};

/// The request's distance space: features z-scored with statistics of
/// pool ∪ labeled.
struct RequestSpace {
    Standardizer scaler;
    Matrix pool;
    Matrix labeled;
};
RequestSpace request_space(const SelectionRequest& req);

/// Indices of the b largest scores; ties go to the lowest index.
std::vector<std::size_t> top_b(std::span<const double> scores, std::size_t b);

// ---------------------------------------------------------------------------
// Initialization strategies (model-free)
// ---------------------------------------------------------------------------

/// Partition of feature indices into positively and negatively acting sets.
struct ParetoSpec {
    std::vector<std::size_t> positive;
    std::vector<std::size_t> negative;

    /// Throws ConfigError unless the two sets partition {0..d-1}.
    void validate(std::size_t d) const;

    static ParetoSpec from_names(const std::vector<std::string>& positive, const std::vector<std::string>& negative,
                                 const std::vector<std::string>& feature_names);
    /// sign[j] > 0 puts feature j in the positive set, otherwise the negative one.
    static ParetoSpec from_signs(const std::vector<int>& signs);
};

enum class DominanceDirection { positive, negative };

bool pareto_dominates(std::span<const double> x, std::span<const double> other, const ParetoSpec& spec,
                      DominanceDirection direction);

/// Indices of pool rows dominated by no other row in either direction, ascending.
std::vector<std::size_t> pareto_front(const Matrix& pool, const ParetoSpec& spec);

std::vector<std::size_t> select_random(const SelectionRequest& req);

/// Non-dominated samples; a random subset when there are more than b, topped
/// up at random from the dominated rest when there are fewer.
std::vector<std::size_t> select_pareto(const SelectionRequest& req, const ParetoSpec& spec);

/// Sequential max-min distance picks over `candidates` (indices into
/// `points`), measured against `reference` plus earlier picks. With an empty
/// reference the first pick is the candidate farthest from the centroid of
/// `points`. Ties go to the lowest index.
std::vector<std::size_t> greedy_max_min(const Matrix& points, std::span<const std::size_t> candidates,
                                        const Matrix& reference, std::size_t b);

std::vector<std::size_t> select_distance(const SelectionRequest& req);

/// K-means over the pool, cluster medoids as representatives, then distance
/// sampling among them. Falls back to select_distance when |pool| < K.
std::vector<std::size_t> select_clustering(const SelectionRequest& req, std::size_t k = 20);

// ---------------------------------------------------------------------------
// Model-aware strategies
// ---------------------------------------------------------------------------

enum class Binning { equal_width, equal_frequency };

struct UdiConfig {
    int bins = 5;
    Binning binning = Binning::equal_frequency;
    RegressorParams surrogate;
};

struct UclConfig {
    std::size_t clusters = 20;      // K
    std::size_t top_clusters = 5;   // k
};

struct EmcmConfig {
    double learning_rate = 0.01;  // mu
    CommitteeSpec committee;
};

/// min over labels y' of |f(x) - y'| for every pool sample.
std::vector<double> score_pr(const SelectionRequest& req);

/// Pr selection; `sequential` adds each pick's prediction to the reference labels.
std::vector<std::size_t> select_pr(const SelectionRequest& req, bool sequential = true);

/// Shannon entropy (natural log) of a discrete distribution.
double entropy(std::span<const double> distribution);

/// Bin index per label. Throws StrategyUnavailable if fewer than two bins are occupied.
std::vector<int> discretize_labels(std::span<const double> labels, const UdiConfig& cfg);

std::vector<double> score_udi(const SelectionRequest& req, const UdiConfig& cfg);

struct UclTrace {
    Clustering clustering;
    std::vector<double> cluster_variance;
    std::vector<std::size_t> chosen_clusters;
    std::vector<double> silhouette;
};

/// Clusters the pool, keeps the k clusters whose members' predictions vary
/// most, and returns the b lowest-silhouette members among them.
std::vector<std::size_t> select_ucl(const SelectionRequest& req, const UclConfig& cfg, UclTrace* trace = nullptr);

/// Inverse-distance weighted mean of labeled squared residuals.
std::vector<double> score_umse(const SelectionRequest& req);

/// Committee prediction variance per pool sample.
std::vector<double> score_qbc(const SelectionRequest& req, const CommitteeSpec& committee);

/// (1/C) sum_c || 2 mu x (f(x) - f^c(x)) ||^2 for one input vector.
double emcm_model_change(std::span<const double> x, double main_prediction, std::span<const double> member_predictions,
                         double learning_rate);

/// EMCM score with x taken as the z-scored features plus a constant 1.
std::vector<double> score_emcm(const SelectionRequest& req, const EmcmConfig& cfg);

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

enum class StrategyName { random, pareto, di, cl, pr, udi, ucl, umse, qbc_boot, qbc_model, emcm_boot, emcm_model };

std::string to_string(StrategyName name);
StrategyName parse_strategy(std::string_view text);
/// random, pareto, di and cl need neither labels nor a model.
bool is_initialization_strategy(StrategyName name);

struct StrategyConfig {
    std::optional<ParetoSpec> pareto;
    std::size_t cl_clusters = 20;
    bool pr_sequential = true;
    UdiConfig udi;
    UclConfig ucl;
    CommitteeSpec qbc;  // mode is set per strategy name
    EmcmConfig emcm;    // committee mode is set per strategy name
};

std::vector<std::size_t> select(StrategyName name, const SelectionRequest& req, const StrategyConfig& cfg);

}  // namespace alsched
