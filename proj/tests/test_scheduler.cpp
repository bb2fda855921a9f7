#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "alsched/scheduler.hpp"

using namespace alsched;

namespace {

struct Stream {
    std::vector<Pool> pools;
    Oracle oracle;
    TestSet test;
};

// y = 2x + 1 on one feature
Stream hand_stream() {
    Stream s;
    const std::vector<std::vector<double>> xs{{0, 1, 5}, {2}, {3, 8, -2}};
    const std::string ids = "abc";
    for (int t = 1; t <= 3; ++t) {
        Pool p{t, {}};
        const auto& row = xs[static_cast<std::size_t>(t - 1)];
        for (std::size_t i = 0; i < row.size(); ++i) {
            Sample smp{std::string(1, ids[t - 1]) + std::to_string(i + 1), t, {row[i]}, nullptr};
            s.oracle.set(smp.key(), 2 * row[i] + 1);
            p.samples.push_back(smp);
        }
        s.pools.push_back(p);
    }
    for (double x : {-5.0, 0.5, 10.0}) {
        s.test.features.append_row(std::vector<double>{x});
        s.test.labels.push_back(2 * x + 1);
        s.test.keys.push_back({"h" + std::to_string(x), 0});
    }
    return s;
}

ExperimentData synth_data(std::uint64_t seed, int horizon = 12, int n = 40) {
    SynthConfig cfg;
    cfg.horizon = horizon;
    cfg.pool_size = n;
    auto s = synth_pool_stream(cfg, seed);
    return {s.pools, s.oracle, s.holdout};
}

ExperimentConfig small_config(std::string name, StrategyName select, int horizon = 12) {
    ExperimentConfig c;
    c.name = std::move(name);
    c.horizon = horizon;
    c.budget = 3;
    c.init_rounds = 3;
    c.select_strategy = select;
    c.regressor_params.forest_trees = 10;
    c.committee_size = 3;
    c.cl_clusters = 5;
    c.ucl_clusters = 5;
    c.ucl_top_clusters = 2;
    c.random_baseline_repeats = 3;
    c.checkpoints = {5, horizon};
    return c;
}

}  // namespace

TEST(Schedule, HandTrace) {
    auto s = hand_stream();
    ExperimentConfig cfg;
    cfg.name = "trace";
    cfg.horizon = 3;
    cfg.budget = 1;
    cfg.init_rounds = 1;
    cfg.init_strategy = StrategyName::di;
    cfg.select_strategy = StrategyName::pr;
    cfg.regressor = RegressorKind::ols;
    cfg.checkpoints = {3};
    auto r = run_experiment(s.pools, s.oracle, s.test, cfg);

    ASSERT_EQ(r.schedule.size(), 3u);
    EXPECT_EQ(r.schedule[0].case_id, "a3");
    EXPECT_EQ(r.schedule[0].strategy, "di");
    EXPECT_EQ(r.schedule[1].case_id, "b1");
    EXPECT_EQ(r.schedule[1].strategy, "random");
    EXPECT_EQ(r.schedule[2].case_id, "c3");
    EXPECT_EQ(r.schedule[2].strategy, "pr");
    EXPECT_EQ(r.fallback_rounds, (std::vector<int>{2}));
    EXPECT_EQ(r.labeled_sizes, (std::vector<std::size_t>{1, 2, 3}));
    EXPECT_EQ(r.report.first_round, 2);
    ASSERT_EQ(r.report.curve.size(), 2u);
    for (double m : r.report.curve) EXPECT_NEAR(m, 0.0, 1e-18);
}

TEST(Schedule, LabeledGrowsByBudget) {
    auto d = synth_data(1);
    for (auto sel : {StrategyName::qbc_boot, StrategyName::emcm_boot, StrategyName::umse, StrategyName::pr}) {
        auto cfg = small_config("g", sel);
        auto r = run_experiment(d.pools, d.oracle, d.test, cfg);
        for (std::size_t t = 0; t < r.labeled_sizes.size(); ++t) EXPECT_EQ(r.labeled_sizes[t], (t + 1) * cfg.budget);
        std::set<std::pair<std::string, std::int64_t>> keys;
        for (const auto& e : r.schedule) keys.insert({e.case_id, e.timestamp});
        EXPECT_EQ(keys.size(), r.schedule.size());
        for (const auto& k : d.test.keys) EXPECT_FALSE(keys.count({k.case_id, k.timestamp}));
    }
}

TEST(Schedule, HoldoutLeakPermutation) {
    auto d = synth_data(2);
    auto cfg = small_config("leak", StrategyName::qbc_boot);
    auto base = run_experiment(d.pools, d.oracle, d.test, cfg);
    Rng rng(9);
    for (int rep = 0; rep < 3; ++rep) {
        auto permuted = d.test;
        for (std::size_t i = permuted.labels.size(); i > 1; --i) std::swap(permuted.labels[i - 1], permuted.labels[rng.index(i)]);
        auto r = run_experiment(d.pools, d.oracle, permuted, cfg);
        ASSERT_EQ(r.schedule.size(), base.schedule.size());
        for (std::size_t i = 0; i < r.schedule.size(); ++i) EXPECT_EQ(r.schedule[i].case_id, base.schedule[i].case_id);
    }
}

TEST(Schedule, HoldoutInPoolRejected) {
    auto d = synth_data(3, 4, 20);
    d.test.keys[0] = d.pools[1].samples[0].key();
    EXPECT_THROW(run_experiment(d.pools, d.oracle, d.test, small_config("x", StrategyName::random, 4)), Error);
}

TEST(Schedule, NoInitializationRounds) {
    auto d = synth_data(4);
    auto cfg = small_config("none", StrategyName::qbc_boot);
    cfg.init_rounds = 0;
    auto r = run_experiment(d.pools, d.oracle, d.test, cfg);
    EXPECT_EQ(r.schedule.front().strategy, "random");
    EXPECT_EQ(r.fallback_rounds.front(), 1);
    EXPECT_EQ(r.report.first_round, 1);
    EXPECT_EQ(r.report.curve.size(), 12u);
}

TEST(Schedule, PureInitialization) {
    auto d = synth_data(5);
    auto cfg = small_config("all_init", StrategyName::qbc_boot);
    cfg.init_rounds = cfg.horizon;
    auto r = run_experiment(d.pools, d.oracle, d.test, cfg);
    for (const auto& e : r.schedule) EXPECT_EQ(e.strategy, "di");
    EXPECT_EQ(r.report.curve.size(), 12u);
    EXPECT_TRUE(std::isfinite(r.report.log_auc));
}

TEST(Schedule, FitAfterInitOnly) {
    auto d = synth_data(6);
    auto cfg = small_config("late", StrategyName::umse);
    cfg.fit_every_round = false;
    auto r = run_experiment(d.pools, d.oracle, d.test, cfg);
    EXPECT_EQ(r.report.first_round, 3);
    EXPECT_EQ(r.report.curve.size(), 10u);
}

TEST(Schedule, Deterministic) {
    auto d = synth_data(7);
    auto cfg = small_config("det", StrategyName::emcm_boot);
    auto a = run_experiment(d.pools, d.oracle, d.test, cfg);
    auto b = run_experiment(d.pools, d.oracle, d.test, cfg);
    EXPECT_EQ(a.report, b.report);
    EXPECT_EQ(a.report.curve, b.report.curve);
}

TEST(Schedule, StreamLengthMustMatch) {
    auto d = synth_data(8, 5, 20);
    EXPECT_THROW(run_experiment(d.pools, d.oracle, d.test, small_config("x", StrategyName::random, 6)), ConfigError);
    auto cfg = small_config("x", StrategyName::random, 5);
    cfg.budget = 21;
    EXPECT_THROW(run_experiment(d.pools, d.oracle, d.test, cfg), BudgetError);
}

TEST(ExperimentConfig, ValidationNamesField) {
    auto expect_field = [](ExperimentConfig c, const std::string& field) {
        try {
            c.validate();
            ADD_FAILURE() << "no error for " << field;
        } catch (const ConfigError& e) {
            EXPECT_EQ(e.field(), field);
        }
    };
    ExperimentConfig c;
    c.budget = 0;
    expect_field(c, "budget");
    c = {};
    c.init_rounds = 101;
    expect_field(c, "init_rounds");
    c = {};
    c.init_strategy = StrategyName::qbc_boot;
    expect_field(c, "init_strategy");
    c = {};
    c.checkpoints = {150};
    expect_field(c, "checkpoints");
    c = {};
    c.init_strategy = StrategyName::pareto;
    expect_field(c, "pareto_positive");
    EXPECT_NO_THROW(ExperimentConfig{}.validate());
}

TEST(ExperimentConfig, Fingerprint) {
    ExperimentConfig a, b;
    EXPECT_EQ(a.fingerprint(), b.fingerprint());
    b.seed = 1;
    EXPECT_NE(a.fingerprint(), b.fingerprint());
    b = a;
    b.regressor_params.forest_trees = 50;
    EXPECT_NE(a.fingerprint(), b.fingerprint());
}

TEST(ExperimentConfig, CommitteesUseMainRegressor) {
    ExperimentConfig c;
    c.regressor = RegressorKind::gradient_boosting;
    c.committee_size = 7;
    auto s = c.strategy_config({});
    EXPECT_EQ(s.qbc.base_kind, RegressorKind::gradient_boosting);
    EXPECT_EQ(s.qbc.size, 7);
    EXPECT_EQ(s.emcm.committee.base_kind, RegressorKind::gradient_boosting);
}

TEST(Batch, OrderAndParallelEquivalence) {
    std::vector<ExperimentConfig> configs{small_config("qbc", StrategyName::qbc_boot),
                                          small_config("rand", StrategyName::random)};
    std::vector<std::uint64_t> seeds{1, 2};
    DataFactory data = [](std::uint64_t s) { return synth_data(s); };
    auto serial = run_batch(data, configs, seeds, 1);
    auto parallel = run_batch(data, configs, seeds, 3);
    ASSERT_EQ(serial.size(), 2u + 2u * 3u);
    ASSERT_EQ(serial.size(), parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        EXPECT_EQ(serial[i].config, parallel[i].config);
        EXPECT_EQ(serial[i].seed, parallel[i].seed);
        EXPECT_EQ(serial[i].repeat, parallel[i].repeat);
        EXPECT_EQ(serial[i].result.report, parallel[i].result.report);
    }
    EXPECT_EQ(serial[2].config, 1u);
    EXPECT_EQ(serial[2].repeat, 0);
    EXPECT_EQ(serial[4].repeat, 2);
}

TEST(Batch, RejectsDuplicateNamesAndHorizons) {
    DataFactory data = [](std::uint64_t s) { return synth_data(s); };
    EXPECT_THROW(run_batch(data, {small_config("a", StrategyName::pr), small_config("a", StrategyName::umse)}, {1}), ConfigError);
    EXPECT_THROW(run_comparison(data, {small_config("a", StrategyName::pr), small_config("b", StrategyName::umse, 6)}, {1}),
                 ConfigError);
    EXPECT_THROW(run_comparison(data, {small_config("a", StrategyName::pr)}, {1}), ConfigError);
}

TEST(Batch, FailureNamesFingerprint) {
    DataFactory data = [](std::uint64_t s) { return synth_data(s, 12, 2); };
    auto cfg = small_config("big_budget", StrategyName::pr);
    try {
        run_batch(data, {cfg}, {5});
        FAIL();
    } catch (const Error& e) {
        auto c = cfg;
        c.seed = 5;
        EXPECT_NE(std::string(e.what()).find(c.fingerprint()), std::string::npos);
    }
}

TEST(RunSeed, RandomRepeatsDiffer) {
    auto r = small_config("r", StrategyName::random);
    auto q = small_config("q", StrategyName::qbc_boot);
    EXPECT_EQ(run_seed(q, 4, 0), 4u);
    std::set<std::uint64_t> seen;
    for (int k = 0; k < 3; ++k) seen.insert(run_seed(r, 4, k));
    EXPECT_EQ(seen.size(), 3u);
}

TEST(Comparison, SelfComparison) {
    DataFactory data = [](std::uint64_t s) { return synth_data(s); };
    auto a = small_config("a", StrategyName::umse);
    auto b = a;
    b.name = "b";
    auto cmp = run_comparison(data, {a, b}, {1, 2});
    ASSERT_EQ(cmp.pairwise.size(), 1u);
    EXPECT_EQ(cmp.pairwise[0].test.p_value, 1.0);
    EXPECT_FALSE(cmp.pairwise[0].test.significant);
    EXPECT_EQ(cmp.summaries[0].log_auc, cmp.summaries[1].log_auc);
}

TEST(Comparison, SummaryFields) {
    DataFactory data = [](std::uint64_t s) { return synth_data(s); };
    auto q = small_config("qbc", StrategyName::qbc_boot);
    auto r = small_config("rand", StrategyName::random);
    auto cmp = run_comparison(data, {q, r}, {1, 2, 3});
    ASSERT_EQ(cmp.summaries.size(), 2u);
    const auto& s = cmp.summaries[0];
    EXPECT_EQ(s.mean_curve.size(), 12u);
    EXPECT_EQ(s.pooled_curve.size(), 36u);
    ASSERT_EQ(s.checkpoints.size(), 2u);
    EXPECT_EQ(s.checkpoints[0].first, 5);
    EXPECT_NEAR(s.checkpoints[0].second, s.mean_curve[4], 1e-12);
    EXPECT_TRUE(cmp.summaries[1].averaged_random);
    EXPECT_FALSE(s.averaged_random);

    double mean_log_auc = 0;
    for (const auto& run : cmp.runs)
        if (run.config == 0) mean_log_auc += run.result.report.log_auc / 3.0;
    EXPECT_NEAR(s.log_auc, mean_log_auc, 1e-9);
}
