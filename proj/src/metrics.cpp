#include "alsched/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace alsched {

double mse(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw DimensionError(y.size(), yhat.size());
    if (y.empty()) throw Error("mse of an empty sample");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return acc / static_cast<double>(y.size());
}

double auc(std::span<const double> curve) { return std::accumulate(curve.begin(), curve.end(), 0.0); }

double log_auc(std::span<const double> curve) {
    double acc = 0.0;
    for (double v : curve) acc += std::log1p(v);
    return acc;
}

namespace {

void require_length(std::span<const double> curve, std::size_t n, const char* what) {
    if (curve.size() < n)
        throw InsufficientDataError(std::string(what) + " needs a curve of at least " + std::to_string(n) +
                                    " rounds, got " + std::to_string(curve.size()));
}

double second_difference(std::span<const double> c, std::size_t t) {
    // t is 1-based, 2 <= t <= T-1
    return std::abs(c[t] - 2.0 * c[t - 1] + c[t - 2]);
}

}  // namespace

double asd(std::span<const double> curve) {
    require_length(curve, 3, "asd");
    const std::size_t T = curve.size();
    double acc = 0.0;
    for (std::size_t t = 2; t <= T - 1; ++t) acc += second_difference(curve, t);
    return acc / static_cast<double>(T - 1);
}

double wasd(std::span<const double> curve) {
    require_length(curve, 3, "wasd");
    const std::size_t T = curve.size();
    double acc = 0.0;
    for (std::size_t t = 2; t <= T - 1; ++t) acc += static_cast<double>(t) * second_difference(curve, t);
    return 2.0 * acc / (static_cast<double>(T - 1) * static_cast<double>(T - 2));
}

std::optional<int> ftc(std::span<const double> curve, double eps) {
    require_length(curve, 2, "ftc");
    const std::size_t T = curve.size();
    std::optional<int> best;
    // walk backwards while every later step stays below eps
    for (std::size_t t = T - 1; t >= 1; --t) {
        if (!(std::abs(curve[t] - curve[t - 1]) < eps)) break;
        best = static_cast<int>(t);
    }
    return best;
}

TTestResult paired_ttest_log(std::span<const double> a, std::span<const double> b, double alpha, int comparisons) {
    if (a.size() != b.size()) throw DimensionError(a.size(), b.size());
    require_length(a, 3, "paired_ttest_log");
    if (comparisons < 1) throw ConfigError("comparisons", "must be at least 1");
    const double n = static_cast<double>(a.size());
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::log1p(a[i]) - std::log1p(b[i]);
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));

    TTestResult r;
    if (sd == 0.0) {
        if (mean == 0.0) {
            r.t_statistic = 0.0;
            r.p_value = 1.0;
        } else {
            r.t_statistic = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            r.p_value = 0.0;
        }
    } else {
        r.t_statistic = mean / (sd / std::sqrt(n));
        boost::math::students_t dist(n - 1.0);
        r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t_statistic))));
    }
    r.significant = r.p_value < alpha / comparisons;
    return r;
}

RunReport RunReport::from_curve(std::vector<double> curve, double eps) {
    RunReport r;
    r.curve = std::move(curve);
    r.auc = alsched::auc(r.curve);
    r.log_auc = alsched::log_auc(r.curve);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.asd = r.curve.size() >= 3 ? alsched::asd(r.curve) : nan;
    r.wasd = r.curve.size() >= 3 ? alsched::wasd(r.curve) : nan;
    if (r.curve.size() >= 2) r.ftc = alsched::ftc(r.curve, eps);
    return r;
}

double RunReport::mse_at(int round) const {
    const int i = round - first_round;
    if (i < 0 || i >= static_cast<int>(curve.size())) return std::numeric_limits<double>::quiet_NaN();
    return curve[static_cast<std::size_t>(i)];
}

std::vector<FeatureImportance> permutation_importance(const Regressor& model, const Matrix& x,
                                                      std::span<const double> y, int repeats, std::uint64_t seed,
                                                      const std::vector<std::string>& names) {
    if (repeats < 1) throw ConfigError("repeats", "must be at least 1");
    if (!names.empty() && names.size() != x.cols()) throw DimensionError(x.cols(), names.size());
    const double base = mse(y, model.predict(x));
    std::vector<FeatureImportance> out;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        std::vector<double> increases;
        for (int r = 0; r < repeats; ++r) {
            Rng rng(mix_seed(mix_seed(seed, j), static_cast<std::uint64_t>(r)));
            Matrix shuffled = x;
            auto order = rng.sample_without_replacement(x.rows(), x.rows());
            for (std::size_t i = 0; i < x.rows(); ++i) shuffled(i, j) = x(order[i], j);
            increases.push_back(mse(y, model.predict(shuffled)) - base);
        }
        const double mean = std::accumulate(increases.begin(), increases.end(), 0.0) / repeats;
        double ss = 0.0;
        for (double v : increases) ss += (v - mean) * (v - mean);
        out.push_back({j, names.empty() ? "x" + std::to_string(j) : names[j], mean,
                       repeats > 1 ? std::sqrt(ss / (repeats - 1)) : 0.0});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const FeatureImportance& a, const FeatureImportance& b) { return a.mean_increase > b.mean_increase; });
    return out;
}

}  // namespace alsched
