#pragma once

// Regression models f_t and committees of them.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alsched/common.hpp"

namespace alsched {

enum class RegressorKind { ols, ridge, lasso, knn, tree, random_forest, gradient_boosting };

std::string to_string(RegressorKind kind);
RegressorKind parse_regressor_kind(std::string_view text);

/// Hyperparameters for every kind; each kind reads only its own fields.
struct RegressorParams {
    double ridge_lambda = 1.0;
    double lasso_lambda = 0.1;
    double lasso_tol = 1e-6;
    int lasso_max_sweeps = 10000;
    int knn_k = 5;
    int tree_max_depth = 10;
    int tree_min_leaf = 2;
    int forest_trees = 100;
    /// Features tried per split; 0 means ceil(d / 3).
    int forest_max_features = 0;
    int boost_stages = 100;
    int boost_depth = 3;
    int boost_min_leaf = 1;
    double boost_learning_rate = 0.1;

    friend bool operator==(const RegressorParams&, const RegressorParams&) = default;
};

class Regressor {
public:
    virtual ~Regressor() = default;

    virtual RegressorKind kind() const = 0;

    /// Trains on (x, y). Deterministic given row order and seed.
    /// Throws InsufficientDataError when fewer than two rows are given.
    virtual void fit(const Matrix& x, std::span<const double> y, std::uint64_t seed) = 0;

    bool fitted() const noexcept { return dim_.has_value(); }
    std::size_t dim() const;

    /// Throws NotFittedError before fit and DimensionError on size mismatch.
    double predict(std::span<const double> x) const;
    std::vector<double> predict(const Matrix& x) const;

    /// Inspection dump: kind, hyperparameters and fitted state.
    virtual nlohmann::json to_json() const = 0;

    /// Non-fatal notes raised during fit (e.g. the OLS ridge fallback).
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

protected:
    virtual double predict_row(std::span<const double> x) const = 0;
    /// Batch prediction; the default calls predict_row per row.
    virtual void predict_rows(const Matrix& x, std::span<double> out) const;
    void begin_fit(const Matrix& x, std::span<const double> y);

    std::optional<std::size_t> dim_;
    std::vector<std::string> warnings_;
};

using RegressorPtr = std::shared_ptr<const Regressor>;

std::unique_ptr<Regressor> make_regressor(RegressorKind kind, const RegressorParams& params = {});

/// Constructs, fits and freezes a model.
RegressorPtr fit_regressor(RegressorKind kind, const RegressorParams& params, const Matrix& x,
                           std::span<const double> y, std::uint64_t seed);

/// OLS, ridge and lasso. Features are z-scored internally; coefficients are
/// reported in the original feature units.
class LinearRegressor final : public Regressor {
public:
    LinearRegressor(RegressorKind kind, RegressorParams params);

    RegressorKind kind() const override { return kind_; }
    void fit(const Matrix& x, std::span<const double> y, std::uint64_t seed) override;
    nlohmann::json to_json() const override;

    const std::vector<double>& coefficients() const;
    double intercept() const;
    /// Coefficients in the standardized space the penalty acts on.
    const std::vector<double>& standardized_coefficients() const { return theta_z_; }

protected:
    double predict_row(std::span<const double> x) const override;

private:
    RegressorKind kind_;
    RegressorParams params_;
    std::vector<double> theta_;
    std::vector<double> theta_z_;
    double intercept_ = 0.0;
    int sweeps_ = 0;
};

class KnnRegressor final : public Regressor {
public:
    explicit KnnRegressor(RegressorParams params) : params_(params) {}

    RegressorKind kind() const override { return RegressorKind::knn; }
    void fit(const Matrix& x, std::span<const double> y, std::uint64_t seed) override;
    nlohmann::json to_json() const override;

protected:
    double predict_row(std::span<const double> x) const override;

private:
    RegressorParams params_;
    Standardizer scaler_;
    Matrix train_;
    std::vector<double> labels_;
};

/// Flattened CART tree with m outputs per leaf (m = 1 for regression; leaf
/// class proportions when trained on one-hot targets).
struct TreeModel {
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        int value_offset = 0;  // leaves: index into values
    };
    std::vector<Node> nodes;
    std::vector<double> values;
    int outputs = 1;

    std::span<const double> leaf_values(std::span<const double> x) const;
    nlohmann::json to_json() const;

    /// Breadth-first copy with sibling children and self-looping leaves, for
    /// branch-free batch traversal. Called once the tree is grown.
    void pack();
    /// out[i] += scale * (first leaf output for row i), same value as leaf_values.
    void accumulate(const Matrix& x, std::span<double> out, double scale = 1.0) const;

private:
    struct PackedNode {
        double threshold;
        int feature;
        int child;  // left child; the right one follows it
    };
    std::vector<PackedNode> packed_;
    std::vector<double> packed_value_;
    int depth_ = 0;
};

struct TreeOptions {
    int max_depth = 10;
    int min_leaf = 2;
    int max_features = 0;  // 0 = all features
};

/// Variance-reduction CART on row weights (bootstrap counts) and m targets.
/// Split ties go to the lowest feature index, then the lowest threshold.
TreeModel grow_tree(const Matrix& x, const Matrix& targets, std::span<const double> weights,
                    const TreeOptions& options, std::uint64_t seed);

class TreeRegressor final : public Regressor {
public:
    explicit TreeRegressor(RegressorParams params) : params_(params) {}

    RegressorKind kind() const override { return RegressorKind::tree; }
    void fit(const Matrix& x, std::span<const double> y, std::uint64_t seed) override;
    nlohmann::json to_json() const override;

protected:
    double predict_row(std::span<const double> x) const override;
    void predict_rows(const Matrix& x, std::span<double> out) const override;

private:
    RegressorParams params_;
    TreeModel tree_;
};

class RandomForestRegressor final : public Regressor {
public:
    explicit RandomForestRegressor(RegressorParams params) : params_(params) {}

    RegressorKind kind() const override { return RegressorKind::random_forest; }
    void fit(const Matrix& x, std::span<const double> y, std::uint64_t seed) override;
    nlohmann::json to_json() const override;
    std::size_t tree_count() const noexcept { return trees_.size(); }

protected:
    double predict_row(std::span<const double> x) const override;
    void predict_rows(const Matrix& x, std::span<double> out) const override;

private:
    RegressorParams params_;
    std::vector<TreeModel> trees_;
};

class GradientBoostingRegressor final : public Regressor {
public:
    explicit GradientBoostingRegressor(RegressorParams params) : params_(params) {}

    RegressorKind kind() const override { return RegressorKind::gradient_boosting; }
    void fit(const Matrix& x, std::span<const double> y, std::uint64_t seed) override;
    nlohmann::json to_json() const override;

protected:
    double predict_row(std::span<const double> x) const override;
    void predict_rows(const Matrix& x, std::span<double> out) const override;

private:
    RegressorParams params_;
    double base_ = 0.0;
    std::vector<TreeModel> stages_;
};

/// Random-forest classifier whose trees store leaf class proportions; the
/// predicted distribution is the average over trees.
class ForestClassifier {
public:
    explicit ForestClassifier(RegressorParams params) : params_(params) {}

    void fit(const Matrix& x, std::span<const int> classes, int num_classes, std::uint64_t seed);
    std::vector<double> predict_proba(std::span<const double> x) const;
    int num_classes() const noexcept { return num_classes_; }

private:
    RegressorParams params_;
    int num_classes_ = 0;
    std::size_t dim_ = 0;
    std::vector<TreeModel> trees_;
};

// ---------------------------------------------------------------------------
// Committees
// ---------------------------------------------------------------------------

enum class CommitteeMode { bootstrap, model };

/// The fixed heterogeneous roster of the model committee.
std::vector<RegressorKind> model_committee_roster();

struct CommitteeSpec {
    CommitteeMode mode = CommitteeMode::bootstrap;
    RegressorKind base_kind = RegressorKind::random_forest;
    int size = 10;  // C; model mode ignores it
    RegressorParams params;
    /// Every member reuses one sub-seed, so all resamples coincide. Diagnostic only.
    bool identical_resamples = false;
};

struct Committee {
    CommitteeMode mode = CommitteeMode::bootstrap;
    std::vector<RegressorPtr> members;
};

/// Bootstrap mode: C members of base_kind on size-n resamples drawn with
/// replacement under distinct sub-seeds. Model mode: one member per roster
/// kind on the full data.
Committee build_committee(const CommitteeSpec& spec, const Matrix& x, std::span<const double> y, std::uint64_t seed);

struct CommitteeStats {
    double mean = 0.0;
    double variance = 0.0;  // population variance over members
    std::vector<double> member_predictions;
};

CommitteeStats committee_stats(const Committee& committee, std::span<const double> x);

/// Member predictions for every row: result[c][i] = f^c(x_i).
std::vector<std::vector<double>> committee_predictions(const Committee& committee, const Matrix& x);

}  // namespace alsched
