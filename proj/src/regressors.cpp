#include "alsched/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tree_internal.hpp"

namespace alsched {

std::string to_string(RegressorKind kind) {
    switch (kind) {
        case RegressorKind::ols: return "ols";
        case RegressorKind::ridge: return "ridge";
        case RegressorKind::lasso: return "lasso";
        case RegressorKind::knn: return "knn";
        case RegressorKind::tree: return "tree";
        case RegressorKind::random_forest: return "random_forest";
        case RegressorKind::gradient_boosting: return "gradient_boosting";
    }
    return "?";
}

RegressorKind parse_regressor_kind(std::string_view text) {
    for (auto k : {RegressorKind::ols, RegressorKind::ridge, RegressorKind::lasso, RegressorKind::knn,
                   RegressorKind::tree, RegressorKind::random_forest, RegressorKind::gradient_boosting})
        if (to_string(k) == text) return k;
    if (text == "linear") return RegressorKind::ols;
    throw std::invalid_argument("unknown regressor kind '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Base
// ---------------------------------------------------------------------------

std::size_t Regressor::dim() const {
    if (!dim_) throw NotFittedError(to_string(kind()) + ": model is not fitted");
    return *dim_;
}

double Regressor::predict(std::span<const double> x) const {
    if (!dim_) throw NotFittedError(to_string(kind()) + ": predict called before fit");
    if (x.size() != *dim_) throw DimensionError(*dim_, x.size());
    return predict_row(x);
}

std::vector<double> Regressor::predict(const Matrix& x) const {
    if (!dim_) throw NotFittedError(to_string(kind()) + ": predict called before fit");
    if (x.rows() > 0 && x.cols() != *dim_) throw DimensionError(*dim_, x.cols());
    std::vector<double> out(x.rows());
    predict_rows(x, out);
    return out;
}

void Regressor::predict_rows(const Matrix& x, std::span<double> out) const {
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
}

void Regressor::begin_fit(const Matrix& x, std::span<const double> y) {
    if (x.rows() < 2) throw InsufficientDataError(to_string(kind()) + ": need at least 2 training rows, got " + std::to_string(x.rows()));
    if (y.size() != x.rows()) throw std::invalid_argument("fit: " + std::to_string(x.rows()) + " rows but " + std::to_string(y.size()) + " labels");
    dim_.reset();
    warnings_.clear();
}

std::unique_ptr<Regressor> make_regressor(RegressorKind kind, const RegressorParams& params) {
    switch (kind) {
        case RegressorKind::ols:
        case RegressorKind::ridge:
        case RegressorKind::lasso: return std::make_unique<LinearRegressor>(kind, params);
        case RegressorKind::knn: return std::make_unique<KnnRegressor>(params);
        case RegressorKind::tree: return std::make_unique<TreeRegressor>(params);
        case RegressorKind::random_forest: return std::make_unique<RandomForestRegressor>(params);
        case RegressorKind::gradient_boosting: return std::make_unique<GradientBoostingRegressor>(params);
    }
    throw std::invalid_argument("unknown regressor kind");
}

RegressorPtr fit_regressor(RegressorKind kind, const RegressorParams& params, const Matrix& x,
                           std::span<const double> y, std::uint64_t seed) {
    auto model = make_regressor(kind, params);
    model->fit(x, y, seed);
    return RegressorPtr(std::move(model));
}

// ---------------------------------------------------------------------------
// kNN
// ---------------------------------------------------------------------------

void KnnRegressor::fit(const Matrix& x, std::span<const double> y, std::uint64_t /*seed*/) {
    begin_fit(x, y);
    if (params_.knn_k < 1) throw std::invalid_argument("knn: k must be at least 1");
    scaler_ = Standardizer::fit(x);
    train_ = scaler_.transform(x);
    labels_.assign(y.begin(), y.end());
    dim_ = x.cols();
}

double KnnRegressor::predict_row(std::span<const double> x) const {
    const auto z = scaler_.transform(x);
    const std::size_t n = train_.rows();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(params_.knn_k), n);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = {squared_distance(z, train_.row(i)), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += labels_[dist[i].second];
    return acc / static_cast<double>(k);
}

nlohmann::json KnnRegressor::to_json() const {
    nlohmann::json j;
    j["kind"] = "knn";
    j["hyperparameters"] = {{"k", params_.knn_k}, {"metric", "euclidean"}};
    j["scaler"] = {{"mean", scaler_.mean}, {"scale", scaler_.scale}};
    j["training_rows"] = train_.rows();
    j["labels"] = labels_;
    return j;
}

// ---------------------------------------------------------------------------
// Trees and ensembles
// ---------------------------------------------------------------------------

namespace {

struct Canonical {
    Matrix x;
    Matrix y;  // n x 1
    std::vector<double> y_flat;
};

Canonical canonicalize(const Matrix& x, std::span<const double> y) {
    const auto order = detail::canonical_order(x, y);
    Canonical c{x.select_rows(order), Matrix(x.rows(), 1), {}};
    c.y_flat.resize(x.rows());
    for (std::size_t i = 0; i < order.size(); ++i) {
        c.y(i, 0) = y[order[i]];
        c.y_flat[i] = y[order[i]];
    }
    return c;
}

std::vector<double> bootstrap_counts(std::size_t n, Rng& rng) {
    std::vector<double> counts(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) counts[rng.index(n)] += 1.0;
    return counts;
}

int forest_features(const RegressorParams& p, std::size_t d) {
    if (p.forest_max_features > 0) return std::min<int>(p.forest_max_features, static_cast<int>(d));
    return static_cast<int>((d + 2) / 3);
}

nlohmann::json tree_params_json(const RegressorParams& p) {
    return {{"max_depth", p.tree_max_depth}, {"min_leaf", p.tree_min_leaf}};
}

}  // namespace

void TreeRegressor::fit(const Matrix& x, std::span<const double> y, std::uint64_t seed) {
    begin_fit(x, y);
    const auto c = canonicalize(x, y);
    const std::vector<double> weights(x.rows(), 1.0);
    tree_ = grow_tree(c.x, c.y, weights, TreeOptions{params_.tree_max_depth, params_.tree_min_leaf, 0}, seed);
    dim_ = x.cols();
}

double TreeRegressor::predict_row(std::span<const double> x) const { return tree_.leaf_values(x)[0]; }

void TreeRegressor::predict_rows(const Matrix& x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    tree_.accumulate(x, out);
}

nlohmann::json TreeRegressor::to_json() const {
    return {{"kind", "tree"}, {"hyperparameters", tree_params_json(params_)}, {"tree", tree_.to_json()}};
}

void RandomForestRegressor::fit(const Matrix& x, std::span<const double> y, std::uint64_t seed) {
    begin_fit(x, y);
    if (params_.forest_trees < 1) throw std::invalid_argument("random_forest: need at least one tree");
    const auto c = canonicalize(x, y);
    const detail::ColumnData columns(c.x);
    const TreeOptions options{params_.tree_max_depth, params_.tree_min_leaf, forest_features(params_, x.cols())};
    trees_.clear();
    trees_.reserve(static_cast<std::size_t>(params_.forest_trees));
    for (int t = 0; t < params_.forest_trees; ++t) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        const auto weights = bootstrap_counts(x.rows(), rng);
        trees_.push_back(detail::grow_tree(columns, c.y, weights, options, rng.next()));
    }
    dim_ = x.cols();
}

double RandomForestRegressor::predict_row(std::span<const double> x) const {
    double acc = 0.0;
    for (const auto& t : trees_) acc += t.leaf_values(x)[0];
    return acc / static_cast<double>(trees_.size());
}

void RandomForestRegressor::predict_rows(const Matrix& x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& t : trees_) t.accumulate(x, out);
    for (auto& v : out) v /= static_cast<double>(trees_.size());
}

nlohmann::json RandomForestRegressor::to_json() const {
    nlohmann::json j;
    j["kind"] = "random_forest";
    auto hp = tree_params_json(params_);
    hp["trees"] = params_.forest_trees;
    hp["max_features"] = dim_ ? forest_features(params_, *dim_) : params_.forest_max_features;
    j["hyperparameters"] = hp;
    auto& arr = j["trees"] = nlohmann::json::array();
    for (const auto& t : trees_) arr.push_back(t.to_json());
    return j;
}

void GradientBoostingRegressor::fit(const Matrix& x, std::span<const double> y, std::uint64_t seed) {
    begin_fit(x, y);
    const auto c = canonicalize(x, y);
    const std::size_t n = x.rows();
    const detail::ColumnData columns(c.x);
    const TreeOptions options{params_.boost_depth, params_.boost_min_leaf, 0};
    const std::vector<double> weights(n, 1.0);

    base_ = std::accumulate(c.y_flat.begin(), c.y_flat.end(), 0.0) / static_cast<double>(n);
    std::vector<double> current(n, base_);
    Matrix residual(n, 1);
    stages_.clear();
    for (int s = 0; s < params_.boost_stages; ++s) {
        for (std::size_t i = 0; i < n; ++i) residual(i, 0) = c.y_flat[i] - current[i];
        auto tree = detail::grow_tree(columns, residual, weights, options, mix_seed(seed, static_cast<std::uint64_t>(s)));
        for (std::size_t i = 0; i < n; ++i) current[i] += params_.boost_learning_rate * tree.leaf_values(c.x.row(i))[0];
        stages_.push_back(std::move(tree));
    }
    dim_ = x.cols();
}

double GradientBoostingRegressor::predict_row(std::span<const double> x) const {
    double acc = base_;
    for (const auto& t : stages_) acc += params_.boost_learning_rate * t.leaf_values(x)[0];
    return acc;
}

void GradientBoostingRegressor::predict_rows(const Matrix& x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), base_);
    for (const auto& t : stages_) t.accumulate(x, out, params_.boost_learning_rate);
}

nlohmann::json GradientBoostingRegressor::to_json() const {
    nlohmann::json j;
    j["kind"] = "gradient_boosting";
    j["hyperparameters"] = {{"stages", params_.boost_stages},
                            {"depth", params_.boost_depth},
                            {"min_leaf", params_.boost_min_leaf},
                            {"learning_rate", params_.boost_learning_rate},
                            {"loss", "squared"}};
    j["base"] = base_;
    auto& arr = j["stages"] = nlohmann::json::array();
    for (const auto& t : stages_) arr.push_back(t.to_json());
    return j;
}

void ForestClassifier::fit(const Matrix& x, std::span<const int> classes, int num_classes, std::uint64_t seed) {
    if (x.rows() < 2) throw InsufficientDataError("forest classifier: need at least 2 rows");
    if (classes.size() != x.rows()) throw std::invalid_argument("forest classifier: label count differs from rows");
    num_classes_ = num_classes;
    dim_ = x.cols();
    std::vector<double> y(classes.begin(), classes.end());
    const auto order = detail::canonical_order(x, y);
    const Matrix xc = x.select_rows(order);
    Matrix onehot(x.rows(), static_cast<std::size_t>(num_classes), 0.0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const int c = classes[order[i]];
        if (c < 0 || c >= num_classes) throw std::invalid_argument("forest classifier: class index out of range");
        onehot(i, static_cast<std::size_t>(c)) = 1.0;
    }
    const detail::ColumnData columns(xc);
    const TreeOptions options{params_.tree_max_depth, 1, forest_features(params_, x.cols())};
    trees_.clear();
    for (int t = 0; t < params_.forest_trees; ++t) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        const auto weights = bootstrap_counts(x.rows(), rng);
        trees_.push_back(detail::grow_tree(columns, onehot, weights, options, rng.next()));
    }
}

std::vector<double> ForestClassifier::predict_proba(std::span<const double> x) const {
    if (trees_.empty()) throw NotFittedError("forest classifier: predict before fit");
    if (x.size() != dim_) throw DimensionError(dim_, x.size());
    std::vector<double> p(static_cast<std::size_t>(num_classes_), 0.0);
    for (const auto& t : trees_) {
        const auto leaf = t.leaf_values(x);
        for (std::size_t k = 0; k < p.size(); ++k) p[k] += leaf[k];
    }
    for (auto& v : p) v /= static_cast<double>(trees_.size());
    return p;
}

// ---------------------------------------------------------------------------
// Committees
// ---------------------------------------------------------------------------

std::vector<RegressorKind> model_committee_roster() {
    return {RegressorKind::ridge,         RegressorKind::lasso,
            RegressorKind::ols,           RegressorKind::random_forest,
            RegressorKind::gradient_boosting, RegressorKind::knn};
}

Committee build_committee(const CommitteeSpec& spec, const Matrix& x, std::span<const double> y, std::uint64_t seed) {
    if (x.rows() < 2) throw InsufficientDataError("committee: need at least 2 labeled samples, got " + std::to_string(x.rows()));
    Committee com;
    com.mode = spec.mode;
    if (spec.mode == CommitteeMode::model) {
        const auto roster = model_committee_roster();
        for (std::size_t c = 0; c < roster.size(); ++c)
            com.members.push_back(fit_regressor(roster[c], spec.params, x, y, mix_seed(seed, c + 1)));
        return com;
    }
    if (spec.size < 2) throw std::invalid_argument("committee: bootstrap size C must be at least 2");
    const std::size_t n = x.rows();
    for (int c = 0; c < spec.size; ++c) {
        const std::uint64_t sub = mix_seed(seed, spec.identical_resamples ? 0u : static_cast<std::uint64_t>(c) + 1);
        Rng rng(sub);
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = rng.index(n);
        std::vector<double> yb(n);
        for (std::size_t i = 0; i < n; ++i) yb[i] = y[rows[i]];
        com.members.push_back(fit_regressor(spec.base_kind, spec.params, x.select_rows(rows), yb, mix_seed(sub, 0xB007)));
    }
    return com;
}

CommitteeStats committee_stats(const Committee& committee, std::span<const double> x) {
    CommitteeStats s;
    for (const auto& m : committee.members) s.member_predictions.push_back(m->predict(x));
    const double c = static_cast<double>(s.member_predictions.size());
    for (double p : s.member_predictions) s.mean += p;
    s.mean /= c;
    for (double p : s.member_predictions) s.variance += (p - s.mean) * (p - s.mean);
    s.variance /= c;
    return s;
}

std::vector<std::vector<double>> committee_predictions(const Committee& committee, const Matrix& x) {
    std::vector<std::vector<double>> out;
    out.reserve(committee.members.size());
    for (const auto& m : committee.members) out.push_back(m->predict(x));
    return out;
}

}  // namespace alsched
