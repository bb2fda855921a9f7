// Acceptance checks; prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
//
//   alsched_acceptance [--seeds N] [--parallel P] [--only K]

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "alsched/harness.hpp"
#include "alsched/metrics.hpp"
#include "alsched/scheduler.hpp"
#include "alsched/strategies.hpp"
#include "../oracles.hpp"

using namespace alsched;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::vector<std::string> notes;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (notes.size() < 5) notes.push_back(what);
        }
    }
    void near(double got, double want, double tol, const std::string& what) {
        expect(std::abs(got - want) <= tol, fmt::format("{}: got {:.12g}, want {:.12g}", what, got, want));
    }
};

struct Options {
    int seeds = 10;
    int parallel = 0;
    int only = 0;
};

// ---------------------------------------------------------------------------

Check metric_exactness() {
    Check c;
    const double tol = 1e-9;
    c.near(mse(std::vector<double>{0, 0}, std::vector<double>{1, 3}), 5.0, tol, "mse((0,0),(1,3))");
    c.near(mse(std::vector<double>{2}, std::vector<double>{5}), 9.0, tol, "mse single pair");
    c.near(mse(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 0.0, tol, "mse identity");
    c.near(auc(std::vector<double>{1, 2, 3}), 6.0, tol, "auc(1,2,3)");
    c.near(log_auc(std::vector<double>{1, 2, 3}), std::log(2.0) + std::log(3.0) + std::log(4.0), tol, "logauc(1,2,3)");
    const double e1 = std::exp(1.0) - 1.0;
    c.near(log_auc(std::vector<double>{e1, e1}), 2.0, tol, "logauc(e-1,e-1)");
    c.near(auc(std::vector<double>{0, 0}) + log_auc(std::vector<double>{0, 0}), 0.0, tol, "zero curve");
    c.near(asd(std::vector<double>{0, 1, 0}), 1.0, tol, "asd(0,1,0)");
    c.near(asd(std::vector<double>{1, 2, 3, 4}), 0.0, tol, "asd linear");
    c.near(asd(std::vector<double>{7, 7, 7, 7, 7}), 0.0, tol, "asd constant");
    c.near(wasd(std::vector<double>{0, 1, 0}), 4.0, tol, "wasd(0,1,0)");
    c.near(wasd(std::vector<double>{7, 7, 7}), 0.0, tol, "wasd constant");
    // normalizers: 1/(T-1) and 2/((T-1)(T-2)) over the T-2 interior terms
    const std::vector<double> curve{3, 1, 4, 1, 5};
    double a = 0, w = 0;
    for (std::size_t t = 1; t + 1 < curve.size(); ++t) {
        const double d = std::abs(curve[t + 1] - 2 * curve[t] + curve[t - 1]);
        a += d;
        w += static_cast<double>(t + 1) * d;
    }
    c.near(asd(curve), a / 4.0, tol, "asd normalizer");
    c.near(wasd(curve), 2.0 * w / (4.0 * 3.0), tol, "wasd normalizer");
    c.expect(ftc(std::vector<double>{5, 3, 3.005, 3.004, 3.004}, 0.01) == 2, "ftc(5,3,3.005,3.004,3.004) = 2");
    c.expect(ftc(std::vector<double>{2, 2, 2}, 0.01) == 1, "ftc constant = 1");
    c.expect(!ftc(std::vector<double>{1, 1, 2}, 0.01).has_value(), "ftc never");
    return c;
}

Pool make_pool(const oracle::Rows& rows) {
    Pool p;
    for (std::size_t i = 0; i < rows.size(); ++i) p.samples.push_back(Sample{"p" + std::to_string(i), 1, rows[i], nullptr});
    return p;
}

LabeledSet make_labeled(const oracle::Rows& rows, const std::vector<double>& y) {
    LabeledSet set;
    for (std::size_t i = 0; i < rows.size(); ++i) set.add(Sample{"l" + std::to_string(i), 0, rows[i], nullptr}, y[i], 0);
    return set;
}

oracle::Rows random_rows(Rng& rng, std::size_t n, std::size_t d, bool grid) {
    oracle::Rows rows(n, std::vector<double>(d));
    for (auto& r : rows)
        for (auto& v : r) v = grid ? static_cast<double>(rng.index(5)) : rng.normal(0.0, 1.0 + 4.0 * rng.uniform());
    return rows;
}

Check selection_oracles() {
    Check c;
    Rng rng(20240601);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(200), d = 1 + rng.index(20);
        const auto rows = random_rows(rng, n, d, false);
        const auto lab = random_rows(rng, rng.index(12), d, false);
        const auto labeled = make_labeled(lab, std::vector<double>(lab.size(), 0.0));
        const Pool pool = make_pool(rows);
        const std::size_t b = 1 + rng.index(std::min<std::size_t>(n, 10));
        const auto picks = select_distance({pool, labeled, nullptr, b, 0});
        c.expect(picks == oracle::greedy_distance(rows, lab, b), fmt::format("distance trial {} (n={}, d={})", trial, n, d));

        // coarse grid values so that ties and duplicates occur
        const auto grid = random_rows(rng, n, std::max<std::size_t>(d, 2), trial % 2 == 0);
        std::vector<int> signs(grid[0].size());
        for (auto& s : signs) s = rng.uniform() < 0.5 ? 1 : -1;
        const auto spec = ParetoSpec::from_signs(signs);
        const auto front = pareto_front(make_pool(grid).features(), spec);
        c.expect(std::set<std::size_t>(front.begin(), front.end()) == oracle::pareto_front(grid, spec),
                 fmt::format("pareto trial {}", trial));
        const auto sel = select_pareto({make_pool(grid), LabeledSet{}, nullptr, 1, static_cast<std::uint64_t>(trial)}, spec);
        const auto ref = oracle::pareto_front(grid, spec);
        c.expect(ref.empty() || ref.count(sel[0]) == 1, fmt::format("pareto pick trial {}", trial));
    }
    return c;
}

Check strategy_oracles() {
    Check c;
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.index(96), m = 3 + rng.index(18), d = 1 + rng.index(6);
        const auto rows = random_rows(rng, n, d, false);
        auto lab = random_rows(rng, m, d, false);
        if (trial % 5 == 0) lab[0] = rows[0];  // a coincident candidate
        std::vector<double> y;
        for (const auto& r : lab) y.push_back(3.0 * r[0] - r[d - 1] + rng.normal(0.0, 1.0));
        const Pool pool = make_pool(rows);
        const LabeledSet labeled = make_labeled(lab, y);
        const auto model = fit_regressor(RegressorKind::tree, RegressorParams{}, labeled.features(), y, trial);
        const std::uint64_t seed = 1000u + static_cast<std::uint64_t>(trial);
        SelectionRequest req{pool, labeled, model, std::min<std::size_t>(n, 5), seed};

        const auto umse = score_umse(req);
        const auto umse_ref = oracle::umse(rows, lab, y, model->predict(labeled.features()));
        for (std::size_t i = 0; i < n; ++i) c.near(umse[i], umse_ref[i], 1e-9, fmt::format("umse trial {} row {}", trial, i));

        CommitteeSpec spec;
        spec.base_kind = RegressorKind::tree;
        spec.size = 5;
        const auto qbc = score_qbc(req, spec);
        const auto committee = build_committee(spec, labeled.features(), y, mix_seed(seed, 0xC0));
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> member;
            for (const auto& f : committee.members) member.push_back(f->predict(pool.samples[i].features));
            c.near(qbc[i], oracle::population_variance(member), 1e-9, fmt::format("qbc trial {} row {}", trial, i));
        }

        EmcmConfig emcm;
        emcm.committee = spec;
        const auto base = score_emcm(req, emcm);
        for (double factor : {0.1, 3.0, 250.0}) {
            EmcmConfig scaled = emcm;
            scaled.learning_rate = emcm.learning_rate * factor;
            const auto s = score_emcm(req, scaled);
            c.expect(top_b(s, n) == top_b(base, n), fmt::format("emcm ordering trial {} factor {}", trial, factor));
        }
    }
    return c;
}

Check regressor_sanity() {
    Check c;
    Rng rng(5);
    Matrix x(20, 2);
    std::vector<double> y(20);
    for (std::size_t i = 0; i < 20; ++i) {
        x(i, 0) = rng.uniform(-3, 3);
        x(i, 1) = rng.uniform(-1, 5);
        y[i] = 2.0 * x(i, 0) - 3.0 * x(i, 1) + 1.0;
    }
    LinearRegressor ols(RegressorKind::ols, {});
    ols.fit(x, y, 0);
    c.near(ols.coefficients()[0], 2.0, 1e-6, "ols theta1");
    c.near(ols.coefficients()[1], -3.0, 1e-6, "ols theta2");
    c.near(ols.intercept(), 1.0, 1e-6, "ols intercept");

    std::vector<double> noisy = y;
    for (auto& v : noisy) v += rng.normal(0.0, 0.5);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4}) {
        RegressorParams p;
        p.ridge_lambda = lambda;
        LinearRegressor ridge(RegressorKind::ridge, p);
        ridge.fit(x, noisy, 0);
        const auto& t = ridge.standardized_coefficients();
        const double norm = std::sqrt(std::inner_product(t.begin(), t.end(), t.begin(), 0.0));
        c.expect(norm <= prev + 1e-12, fmt::format("ridge norm grows at lambda {}", lambda));
        prev = norm;
    }

    RegressorParams p;
    p.lasso_lambda = 1e4;
    LinearRegressor lasso(RegressorKind::lasso, p);
    lasso.fit(x, noisy, 0);
    for (double v : lasso.coefficients()) c.expect(v == 0.0, "lasso coefficient not zeroed");

    SynthConfig sc;
    sc.horizon = 1;
    sc.pool_size = 200;
    const auto s = synth_pool_stream(sc, 3);
    const Matrix sx = s.pools[0].features();
    std::vector<double> sy;
    for (const auto& smp : s.pools[0].samples) sy.push_back(s.oracle.label(smp));
    for (auto kind : {RegressorKind::random_forest, RegressorKind::gradient_boosting}) {
        const auto a = fit_regressor(kind, {}, sx, sy, 42);
        const auto b = fit_regressor(kind, {}, sx, sy, 42);
        c.expect(a->predict(sx) == b->predict(sx), to_string(kind) + " predictions differ under one seed");
        c.expect(a->to_json().dump() == b->to_json().dump(), to_string(kind) + " dumps differ under one seed");
    }
    return c;
}

Check schedule_trace() {
    Check c;
    std::vector<Pool> pools;
    Oracle oracle;
    const std::vector<std::vector<double>> xs{{0, 1, 5}, {2}, {3, 8, -2}};
    for (int t = 1; t <= 3; ++t) {
        Pool p{t, {}};
        for (std::size_t i = 0; i < xs[t - 1].size(); ++i) {
            Sample smp{std::string(1, static_cast<char>('a' + t - 1)) + std::to_string(i + 1), t, {xs[t - 1][i]}, nullptr};
            oracle.set(smp.key(), 2.0 * xs[t - 1][i] + 1.0);
            p.samples.push_back(smp);
        }
        pools.push_back(p);
    }
    TestSet test;
    for (double v : {-5.0, 0.5, 10.0}) {
        test.features.append_row(std::vector<double>{v});
        test.labels.push_back(2.0 * v + 1.0);
        test.keys.push_back({"h" + std::to_string(test.keys.size()), 0});
    }
    ExperimentConfig cfg;
    cfg.name = "trace";
    cfg.horizon = 3;
    cfg.budget = 1;
    cfg.init_rounds = 1;
    cfg.init_strategy = StrategyName::di;
    cfg.select_strategy = StrategyName::pr;
    cfg.regressor = RegressorKind::ols;
    cfg.checkpoints = {3};
    const auto r = run_experiment(pools, oracle, test, cfg);
    std::vector<std::string> ids;
    for (const auto& e : r.schedule) ids.push_back(e.case_id);
    c.expect(ids == std::vector<std::string>{"a3", "b1", "c3"}, "hand-traced schedule a3, b1, c3");

    SynthConfig sc;
    sc.horizon = 15;
    sc.pool_size = 60;
    const auto s = synth_pool_stream(sc, 11);
    for (auto sel : {StrategyName::qbc_boot, StrategyName::emcm_boot, StrategyName::umse, StrategyName::random}) {
        ExperimentConfig e;
        e.name = to_string(sel);
        e.horizon = 15;
        e.budget = 4;
        e.init_rounds = 3;
        e.select_strategy = sel;
        e.regressor_params.forest_trees = 20;
        e.committee_size = 4;
        e.checkpoints = {15};
        const auto run = run_experiment(s.pools, s.oracle, s.holdout, e);
        for (std::size_t t = 0; t < run.labeled_sizes.size(); ++t)
            c.expect(run.labeled_sizes[t] == (t + 1) * e.budget, fmt::format("|X_{}| != t*b for {}", t + 1, e.name));

        Rng rng(3);
        for (int rep = 0; rep < 2; ++rep) {
            TestSet permuted = s.holdout;
            for (std::size_t i = permuted.labels.size(); i > 1; --i)
                std::swap(permuted.labels[i - 1], permuted.labels[rng.index(i)]);
            const auto other = run_experiment(s.pools, s.oracle, permuted, e);
            bool same = other.schedule.size() == run.schedule.size();
            for (std::size_t i = 0; same && i < run.schedule.size(); ++i)
                same = other.schedule[i].case_id == run.schedule[i].case_id &&
                       other.schedule[i].timestamp == run.schedule[i].timestamp;
            c.expect(same, "schedule changed when holdout labels were permuted (" + e.name + ")");
        }
    }
    return c;
}

ExperimentConfig flagship(std::string name, StrategyName init, int k, StrategyName select) {
    ExperimentConfig c;
    c.name = std::move(name);
    c.init_strategy = init;
    c.init_rounds = k;
    c.select_strategy = select;
    if (init == StrategyName::pareto) {
        const auto names = synthetic_feature_names(SynthConfig{}.dim);
        const auto signs = synthetic_feature_signs(SynthConfig{}.dim);
        for (std::size_t j = 0; j < names.size(); ++j) (signs[j] > 0 ? c.pareto_positive : c.pareto_negative).push_back(names[j]);
    }
    return c;
}

Comparison subset(const std::vector<ExperimentConfig>& configs, const std::vector<std::uint64_t>& seeds,
                  const std::vector<RunRecord>& runs, const std::vector<std::size_t>& keep) {
    std::vector<ExperimentConfig> cs;
    std::vector<RunRecord> rs;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        cs.push_back(configs[keep[k]]);
        for (const auto& r : runs)
            if (r.config == keep[k]) {
                rs.push_back(r);
                rs.back().config = k;
            }
    }
    return summarize_runs(cs, seeds, std::move(rs));
}

Check qualitative(const Options& opt) {
    Check c;
    const std::vector<ExperimentConfig> configs{
        flagship("di15_qbc_boot", StrategyName::di, 15, StrategyName::qbc_boot),
        flagship("di15_emcm_boot", StrategyName::di, 15, StrategyName::emcm_boot),
        flagship("di15_random", StrategyName::di, 15, StrategyName::random),
        flagship("none_qbc_boot", StrategyName::di, 0, StrategyName::qbc_boot),
        flagship("cl15_qbc_boot", StrategyName::cl, 15, StrategyName::qbc_boot),
        flagship("pareto15_qbc_boot", StrategyName::pareto, 15, StrategyName::qbc_boot),
    };
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(opt.seeds));
    std::iota(seeds.begin(), seeds.end(), std::uint64_t{0});
    const SynthConfig sc;
    DataFactory data = [&](std::uint64_t seed) {
        auto s = synth_pool_stream(sc, seed);
        return ExperimentData{std::move(s.pools), std::move(s.oracle), std::move(s.holdout)};
    };
    const int parallel = opt.parallel > 0 ? opt.parallel : std::max(1u, std::thread::hardware_concurrency());
    std::cout << fmt::format("  running {} configs x {} seeds on {} thread(s)", configs.size(), seeds.size(), parallel)
              << std::endl;
    const auto runs = run_batch(data, configs, seeds, parallel);

    const auto a = subset(configs, seeds, runs, {0, 1, 2});
    const double random_log_auc = a.summaries[2].log_auc;
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& s = a.summaries[k];
        double p = 1.0;
        for (const auto& pw : a.pairwise)
            if ((pw.a == k && pw.b == 2) || (pw.a == 2 && pw.b == k)) p = pw.test.p_value;
        std::cout << fmt::format("  (a) {:<16} logAUC {:9.3f} vs random {:9.3f}  p = {:.3g}", s.name, s.log_auc,
                                 random_log_auc, p)
                  << std::endl;
        c.expect(s.log_auc <= random_log_auc, s.name + " logAUC above random");
        c.expect(p < 0.05, fmt::format("{} vs random: p = {:.3g}", s.name, p));
    }

    const auto b = subset(configs, seeds, runs, {3, 0, 4, 5});
    const double none = b.summaries[0].log_auc;
    std::cout << fmt::format("  (b) {:<16} logAUC {:9.3f}", b.summaries[0].name, none) << std::endl;
    for (std::size_t k = 1; k < 4; ++k) {
        const auto& s = b.summaries[k];
        std::cout << fmt::format("  (b) {:<16} logAUC {:9.3f}  ({:+.2f}% vs none)", s.name, s.log_auc,
                                 100.0 * (s.log_auc - none) / none)
                  << std::endl;
        c.expect(s.log_auc <= 1.02 * none, s.name + " logAUC more than 2% above no initialization");
    }
    return c;
}

Check determinism() {
    Check c;
    const fs::path dir = fs::temp_directory_path() / fmt::format("alsched_acceptance_{}", ::getpid());
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "h.yaml");
        cfg << "seeds: [3, 4]\n"
               "synthetic: {horizon: 12, pool_size: 60}\n"
               "experiments:\n"
               "  - {name: qbc, init_rounds: 3, budget: 4, select_strategy: qbc_boot, forest_trees: 20}\n"
               "  - {name: emcm, init_rounds: 3, budget: 4, select_strategy: emcm_boot, forest_trees: 20}\n"
               "  - {name: rnd, init_rounds: 3, budget: 4, select_strategy: random, random_baseline_repeats: 3}\n";
    }
    std::ostringstream out, err;
    for (const char* run : {"a", "b"}) {
        RunOptions o;
        o.output = dir / run;
        o.parallel = run[0] == 'a' ? 1 : 2;
        c.expect(cmd_run(dir / "h.yaml", o, out, err) == kExitOk, std::string("cmd_run failed: ") + err.str());
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    std::size_t compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
        if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
        const auto rel = fs::relative(e.path(), dir / "a");
        c.expect(fs::exists(dir / "b" / rel) && slurp(e.path()) == slurp(dir / "b" / rel), "differs: " + rel.string());
        ++compared;
    }
    c.expect(compared > 10, "too few CSV files written");
    fs::remove_all(dir);
    return c;
}

Check calibration() {
    Check c;
    const auto y = synth_label_draws(SynthConfig{}, 8, 50000);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss = 0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(y.size() - 1));
    std::cout << fmt::format("  label mean {:.3f} (target {}), sd {:.3f} (target {})", mean, kLabelMean, sd, kLabelSd)
              << std::endl;
    c.expect(std::abs(mean - kLabelMean) <= 0.05 * kLabelMean, "label mean outside 5%");
    c.expect(std::abs(sd - kLabelSd) <= 0.05 * kLabelSd, "label sd outside 5%");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (i + 1 < argc && arg == "--seeds") opt.seeds = std::atoi(argv[++i]);
        else if (i + 1 < argc && arg == "--parallel") opt.parallel = std::atoi(argv[++i]);
        else if (i + 1 < argc && arg == "--only") opt.only = std::atoi(argv[++i]);
        else {
            std::cerr << "usage: alsched_acceptance [--seeds N] [--parallel P] [--only K]\n";
            return 2;
        }
    }
    spdlog::set_level(spdlog::level::err);

    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"metric exactness", metric_exactness},
        {"selection oracles (200 pools)", selection_oracles},
        {"strategy score oracles (50 fixtures)", strategy_oracles},
        {"regressor sanity", regressor_sanity},
        {"schedule trace and invariants", schedule_trace},
        {fmt::format("synthetic reproduction ({} seeds)", opt.seeds), [&] { return qualitative(opt); }},
        {"cmd_run byte determinism", determinism},
        {"label moment calibration", calibration},
    };

    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (opt.only && opt.only != static_cast<int>(k + 1)) continue;
        const auto start = std::chrono::steady_clock::now();
        Check result;
        try {
            result = criteria[k].second();
        } catch (const std::exception& e) {
            result.ok = false;
            result.notes.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << fmt::format("{} criterion {}: {} ({:.1f} s)", result.ok ? "PASS" : "FAIL", k + 1, criteria[k].first,
                                 secs)
                  << std::endl;
        for (const auto& n : result.notes) std::cout << "    " << n << std::endl;
        if (!result.ok) ++failed;
    }
    return failed ? 1 : 0;
}
