#pragma once

// Temporal evaluation of a per-round test MSE curve, plus paired
// significance testing between curves.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alsched/common.hpp"
#include "alsched/regressors.hpp"

namespace alsched {

/// (1/n) sum (y_i - yhat_i)^2. Throws DimensionError on length mismatch.
double mse(std::span<const double> y, std::span<const double> yhat);

/// Sum of MSE_t.
double auc(std::span<const double> curve);
/// Sum of ln(MSE_t + 1).
double log_auc(std::span<const double> curve);

/// Absolute second difference with the 1/(T-1) normalizer. Needs T >= 3.
double asd(std::span<const double> curve);
/// Round-weighted ASD with the 2/((T-1)(T-2)) normalizer. Needs T >= 3.
double wasd(std::span<const double> curve);

/// Smallest 1-based round t with |MSE_i - MSE_{i-1}| < eps for every i in
/// (t, T]; nullopt ("never") when the last step is already >= eps.
std::optional<int> ftc(std::span<const double> curve, double eps = 0.01);

struct TTestResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

/// Two-tailed paired t-test on ln(MSE+1) differences (a - b), T-1 degrees of
/// freedom, significant iff p < alpha / comparisons.
TTestResult paired_ttest_log(std::span<const double> a, std::span<const double> b, double alpha = 0.05,
                             int comparisons = 1);

struct RunReport {
    std::string config_name;
    std::string config_fingerprint;
    std::uint64_t seed = 0;
    int first_round = 1;            // round of curve[0]
    std::vector<double> curve;      // MSE per evaluated round
    double auc = 0.0;
    double log_auc = 0.0;
    double asd = 0.0;               // NaN when the curve is shorter than 3
    double wasd = 0.0;
    std::optional<int> ftc;         // in rounds, relative to first_round = 1
    std::string model_fingerprint;

    static RunReport from_curve(std::vector<double> curve, double eps = 0.01);
    /// MSE at absolute round t, or NaN if it was not evaluated.
    double mse_at(int round) const;

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

struct FeatureImportance {
    std::size_t feature = 0;
    std::string name;
    double mean_increase = 0.0;
    double sd_increase = 0.0;
};

/// Mean MSE increase when each column of x is permuted, `repeats` times per
/// column. Sorted by decreasing mean increase (ties by feature index).
std::vector<FeatureImportance> permutation_importance(const Regressor& model, const Matrix& x,
                                                      std::span<const double> y, int repeats, std::uint64_t seed,
                                                      const std::vector<std::string>& names = {});

}  // namespace alsched
