#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "alsched/data.hpp"
#include "alsched/regressors.hpp"

using namespace alsched;

namespace {

struct Fixture {
    Matrix x;
    std::vector<double> y;
};

Fixture linear_fixture(std::size_t n, double noise, std::uint64_t seed) {
    Rng rng(seed);
    Fixture f{Matrix(n, 2), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        f.x(i, 0) = rng.uniform(-3, 3);
        f.x(i, 1) = rng.uniform(-1, 5);
        f.y[i] = 2.0 * f.x(i, 0) - 3.0 * f.x(i, 1) + 1.0 + rng.normal(0.0, noise);
    }
    return f;
}

Fixture synth_fixture(std::size_t n, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.horizon = 1;
    cfg.pool_size = static_cast<int>(n);
    auto s = synth_pool_stream(cfg, seed);
    Fixture f{s.pools[0].features(), {}};
    for (const auto& x : s.pools[0].samples) f.y.push_back(s.oracle.label(x));
    return f;
}

double l2(const std::vector<double>& v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

const RegressorKind kAllKinds[] = {RegressorKind::ols,  RegressorKind::ridge,         RegressorKind::lasso,
                                   RegressorKind::knn,  RegressorKind::tree,          RegressorKind::random_forest,
                                   RegressorKind::gradient_boosting};

}  // namespace

TEST(Regressor, KindNames) {
    for (auto k : kAllKinds) EXPECT_EQ(parse_regressor_kind(to_string(k)), k);
    EXPECT_THROW(parse_regressor_kind("svm"), std::invalid_argument);
}

TEST(Ols, RecoversCoefficients) {
    auto f = linear_fixture(20, 0.0, 1);
    LinearRegressor m(RegressorKind::ols, {});
    m.fit(f.x, f.y, 0);
    EXPECT_NEAR(m.coefficients()[0], 2.0, 1e-6);
    EXPECT_NEAR(m.coefficients()[1], -3.0, 1e-6);
    EXPECT_NEAR(m.intercept(), 1.0, 1e-6);
    EXPECT_TRUE(m.warnings().empty());
}

TEST(Ols, DotProduct) {
    auto x = Matrix::from_rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    std::vector<double> y{0, 1, 1, 2};
    auto m = fit_regressor(RegressorKind::ols, {}, x, y, 0);
    EXPECT_NEAR(m->predict(std::vector<double>{2, 3}), 5.0, 1e-9);
}

TEST(Ols, SingularFallsBackWithWarning) {
    auto x = Matrix::from_rows({{1, 2}, {2, 4}, {3, 6}, {4, 8}});
    std::vector<double> y{1, 2, 3, 4};
    LinearRegressor m(RegressorKind::ols, {});
    m.fit(x, y, 0);
    EXPECT_FALSE(m.warnings().empty());
    EXPECT_NEAR(m.predict(std::vector<double>{5, 10}), 5.0, 1e-4);
}

TEST(Ridge, ShrinkageMonotone) {
    auto f = linear_fixture(60, 0.5, 2);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
        RegressorParams p;
        p.ridge_lambda = lambda;
        LinearRegressor m(RegressorKind::ridge, p);
        m.fit(f.x, f.y, 0);
        const double norm = l2(m.standardized_coefficients());
        EXPECT_LE(norm, prev + 1e-12);
        prev = norm;
    }
}

TEST(Lasso, ZeroAtHighPenalty) {
    auto f = linear_fixture(60, 0.5, 3);
    RegressorParams p;
    p.lasso_lambda = 1e4;
    LinearRegressor m(RegressorKind::lasso, p);
    m.fit(f.x, f.y, 0);
    for (double c : m.coefficients()) EXPECT_EQ(c, 0.0);
    const double mean = std::accumulate(f.y.begin(), f.y.end(), 0.0) / f.y.size();
    EXPECT_NEAR(m.predict(f.x.row(0)), mean, 1e-9);
}

TEST(Lasso, SmallPenaltyNearOls) {
    auto f = linear_fixture(60, 0.0, 4);
    RegressorParams p;
    p.lasso_lambda = 1e-6;
    LinearRegressor m(RegressorKind::lasso, p);
    m.fit(f.x, f.y, 0);
    EXPECT_NEAR(m.coefficients()[0], 2.0, 1e-3);
    EXPECT_NEAR(m.coefficients()[1], -3.0, 1e-3);
}

TEST(Knn, OneNeighborInterpolates) {
    auto f = linear_fixture(30, 1.0, 5);
    RegressorParams p;
    p.knn_k = 1;
    auto m = fit_regressor(RegressorKind::knn, p, f.x, f.y, 0);
    auto pred = m->predict(f.x);
    for (std::size_t i = 0; i < f.y.size(); ++i) EXPECT_EQ(pred[i], f.y[i]);
}

TEST(Regressor, ConstantLabels) {
    auto f = linear_fixture(30, 0.0, 6);
    std::vector<double> y(30, 4.25);
    for (auto k : kAllKinds) {
        auto m = fit_regressor(k, {}, f.x, y, 0);
        for (std::size_t i = 0; i < 30; i += 7) EXPECT_NEAR(m->predict(f.x.row(i)), 4.25, 1e-9) << to_string(k);
    }
}

TEST(Tree, DepthZeroIsMean) {
    auto f = linear_fixture(25, 1.0, 7);
    RegressorParams p;
    p.tree_max_depth = 0;
    auto m = fit_regressor(RegressorKind::tree, p, f.x, f.y, 0);
    const double mean = std::accumulate(f.y.begin(), f.y.end(), 0.0) / f.y.size();
    EXPECT_NEAR(m->predict(f.x.row(3)), mean, 1e-12);
}

TEST(Regressor, Errors) {
    auto f = linear_fixture(10, 0.0, 8);
    for (auto k : kAllKinds) {
        auto m = make_regressor(k);
        EXPECT_THROW(m->predict(f.x.row(0)), NotFittedError);
        EXPECT_THROW(m->fit(f.x.select_rows(std::vector<std::size_t>{0}), std::vector<double>{1.0}, 0),
                     InsufficientDataError);
        m->fit(f.x, f.y, 0);
        try {
            m->predict(std::vector<double>{1, 2, 3});
            FAIL();
        } catch (const DimensionError& e) {
            EXPECT_EQ(e.expected(), 2u);
            EXPECT_EQ(e.actual(), 3u);
        }
    }
}

TEST(Regressor, BatchEqualsRowPrediction) {
    auto f = synth_fixture(150, 9);
    auto test = synth_fixture(80, 10);
    for (auto k : kAllKinds) {
        auto m = fit_regressor(k, {}, f.x, f.y, 3);
        auto batch = m->predict(test.x);
        for (std::size_t i = 0; i < test.x.rows(); ++i) EXPECT_EQ(batch[i], m->predict(test.x.row(i))) << to_string(k);
    }
}

TEST(RandomForest, TrainErrorBound) {
    auto f = synth_fixture(200, 11);
    auto m = fit_regressor(RegressorKind::random_forest, {}, f.x, f.y, 5);
    const SynthConfig cfg;
    std::vector<double> pred = m->predict(f.x);
    double se = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) se += (pred[i] - f.y[i]) * (pred[i] - f.y[i]);
    EXPECT_LE(se / pred.size(), 1.5 * cfg.noise * cfg.noise);
}

TEST(Ensembles, SeedDeterministic) {
    auto f = synth_fixture(120, 12);
    for (auto k : {RegressorKind::random_forest, RegressorKind::gradient_boosting}) {
        auto a = fit_regressor(k, {}, f.x, f.y, 77);
        auto b = fit_regressor(k, {}, f.x, f.y, 77);
        EXPECT_EQ(a->predict(f.x), b->predict(f.x));
        EXPECT_EQ(a->to_json().dump(), b->to_json().dump());
    }
    auto a = fit_regressor(RegressorKind::random_forest, {}, f.x, f.y, 1);
    auto b = fit_regressor(RegressorKind::random_forest, {}, f.x, f.y, 2);
    EXPECT_NE(a->predict(f.x), b->predict(f.x));
}

TEST(GradientBoosting, BeatsMeanOnSynthetic) {
    auto f = synth_fixture(300, 13);
    auto test = synth_fixture(300, 14);
    auto m = fit_regressor(RegressorKind::gradient_boosting, {}, f.x, f.y, 0);
    const double mean = std::accumulate(f.y.begin(), f.y.end(), 0.0) / f.y.size();
    double se_model = 0, se_mean = 0;
    auto pred = m->predict(test.x);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        se_model += (pred[i] - test.y[i]) * (pred[i] - test.y[i]);
        se_mean += (mean - test.y[i]) * (mean - test.y[i]);
    }
    EXPECT_LT(se_model, 0.6 * se_mean);
}

TEST(ForestClassifier, ProbabilitiesSumToOne) {
    auto f = linear_fixture(80, 0.0, 15);
    std::vector<int> cls;
    for (double v : f.y) cls.push_back(v > 0 ? 1 : 0);
    ForestClassifier c(RegressorParams{});
    c.fit(f.x, cls, 3, 4);
    for (std::size_t i = 0; i < 80; i += 9) {
        auto p = c.predict_proba(f.x.row(i));
        ASSERT_EQ(p.size(), 3u);
        EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
        EXPECT_EQ(p[2], 0.0);
    }
}

TEST(Committee, ModelModeRoster) {
    auto f = synth_fixture(60, 16);
    CommitteeSpec spec;
    spec.mode = CommitteeMode::model;
    auto c = build_committee(spec, f.x, f.y, 1);
    ASSERT_EQ(c.members.size(), 6u);
    std::set<RegressorKind> kinds;
    for (const auto& m : c.members) kinds.insert(m->kind());
    EXPECT_EQ(kinds.size(), 6u);
    auto roster = model_committee_roster();
    EXPECT_EQ(std::set<RegressorKind>(roster.begin(), roster.end()), kinds);
}

TEST(Committee, BootstrapMembersDiffer) {
    auto f = synth_fixture(60, 17);
    CommitteeSpec spec;
    spec.size = 10;
    spec.params.forest_trees = 10;
    auto c = build_committee(spec, f.x, f.y, 1);
    ASSERT_EQ(c.members.size(), 10u);
    std::set<std::vector<double>> preds;
    for (const auto& m : c.members) preds.insert(m->predict(f.x));
    EXPECT_EQ(preds.size(), 10u);
}

TEST(Committee, TooFewRows) {
    auto f = synth_fixture(5, 18);
    CommitteeSpec spec;
    EXPECT_THROW(build_committee(spec, f.x.select_rows(std::vector<std::size_t>{0}), std::vector<double>{f.y[0]}, 0),
                 InsufficientDataError);
}

TEST(Committee, IdenticalResamplesAgree) {
    auto f = synth_fixture(60, 19);
    CommitteeSpec spec;
    spec.size = 4;
    spec.base_kind = RegressorKind::tree;
    spec.identical_resamples = true;
    auto c = build_committee(spec, f.x, f.y, 1);
    for (std::size_t i = 0; i < 60; i += 11) EXPECT_EQ(committee_stats(c, f.x.row(i)).variance, 0.0);
}

TEST(CommitteeStats, HandValues) {
    auto x = Matrix::from_rows({{0}, {1}, {2}});
    Committee unanimous{CommitteeMode::bootstrap,
                        {fit_regressor(RegressorKind::ols, {}, x, std::vector<double>{1, 1, 1}, 0),
                         fit_regressor(RegressorKind::ols, {}, x, std::vector<double>{1, 1, 1}, 0),
                         fit_regressor(RegressorKind::ols, {}, x, std::vector<double>{1, 1, 1}, 0)}};
    auto s = committee_stats(unanimous, std::vector<double>{5});
    EXPECT_NEAR(s.mean, 1.0, 1e-12);
    EXPECT_NEAR(s.variance, 0.0, 1e-12);

    Committee split{CommitteeMode::bootstrap,
                    {fit_regressor(RegressorKind::ols, {}, x, std::vector<double>{0, 0, 0}, 0),
                     fit_regressor(RegressorKind::ols, {}, x, std::vector<double>{2, 2, 2}, 0)}};
    s = committee_stats(split, std::vector<double>{5});
    EXPECT_NEAR(s.mean, 1.0, 1e-12);
    EXPECT_NEAR(s.variance, 1.0, 1e-12);
    auto all = committee_predictions(split, x);
    ASSERT_EQ(all.size(), 2u);
    EXPECT_NEAR(all[1][2], 2.0, 1e-12);
}
