#include <cmath>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "alsched/regressors.hpp"

namespace alsched {

namespace {

constexpr double kOlsFallbackLambda = 1e-8;

double soft_threshold(double v, double lambda) {
    if (v > lambda) return v - lambda;
    if (v < -lambda) return v + lambda;
    return 0.0;
}

}  // namespace

LinearRegressor::LinearRegressor(RegressorKind kind, RegressorParams params) : kind_(kind), params_(params) {
    if (kind != RegressorKind::ols && kind != RegressorKind::ridge && kind != RegressorKind::lasso)
        throw std::invalid_argument("LinearRegressor handles ols, ridge and lasso only");
}

void LinearRegressor::fit(const Matrix& x, std::span<const double> y, std::uint64_t /*seed*/) {
    begin_fit(x, y);
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();

    const Standardizer scaler = Standardizer::fit(x);
    Eigen::MatrixXd z(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) z(i, j) = (x(i, j) - scaler.mean[j]) / scaler.scale[j];

    double y_mean = 0.0;
    for (double v : y) y_mean += v;
    y_mean /= static_cast<double>(n);
    Eigen::VectorXd yc(n);
    for (std::size_t i = 0; i < n; ++i) yc(i) = y[i] - y_mean;

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
    auto solve_ridge = [&](double lambda) {
        Eigen::MatrixXd gram = z.transpose() * z;
        gram.diagonal().array() += lambda;
        return Eigen::VectorXd(gram.ldlt().solve(z.transpose() * yc));
    };

    switch (kind_) {
        case RegressorKind::ols: {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
            if (qr.rank() < static_cast<Eigen::Index>(d)) {
                warnings_.push_back("singular normal equations; fell back to ridge with lambda=1e-8");
                spdlog::warn("ols: singular normal equations (rank {} < {}), using ridge lambda={}", qr.rank(), d,
                             kOlsFallbackLambda);
                theta = solve_ridge(kOlsFallbackLambda);
            } else {
                theta = qr.solve(yc);
            }
            break;
        }
        case RegressorKind::ridge:
            theta = solve_ridge(params_.ridge_lambda);
            break;
        case RegressorKind::lasso: {
            // minimizes (1/2n)||y - Z theta||^2 + lambda ||theta||_1
            const double inv_n = 1.0 / static_cast<double>(n);
            Eigen::VectorXd col_sq(d);
            for (std::size_t j = 0; j < d; ++j) col_sq(j) = z.col(j).squaredNorm() * inv_n;
            Eigen::VectorXd residual = yc;
            sweeps_ = 0;
            while (sweeps_ < params_.lasso_max_sweeps) {
                ++sweeps_;
                double max_change = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    if (col_sq(j) <= 0.0) continue;
                    const double old = theta(j);
                    const double rho = z.col(j).dot(residual) * inv_n + col_sq(j) * old;
                    const double updated = soft_threshold(rho, params_.lasso_lambda) / col_sq(j);
                    if (updated != old) {
                        residual -= (updated - old) * z.col(j);
                        theta(j) = updated;
                        max_change = std::max(max_change, std::abs(updated - old));
                    }
                }
                if (max_change < params_.lasso_tol) break;
            }
            break;
        }
        default:
            break;
    }

    theta_z_.assign(theta.data(), theta.data() + d);
    theta_.resize(d);
    intercept_ = y_mean;
    for (std::size_t j = 0; j < d; ++j) {
        theta_[j] = theta_z_[j] / scaler.scale[j];
        intercept_ -= theta_[j] * scaler.mean[j];
    }
    dim_ = d;
}

const std::vector<double>& LinearRegressor::coefficients() const {
    if (!fitted()) throw NotFittedError(to_string(kind_) + ": coefficients requested before fit");
    return theta_;
}

double LinearRegressor::intercept() const {
    if (!fitted()) throw NotFittedError(to_string(kind_) + ": intercept requested before fit");
    return intercept_;
}

double LinearRegressor::predict_row(std::span<const double> x) const {
    double acc = intercept_;
    for (std::size_t j = 0; j < theta_.size(); ++j) acc += theta_[j] * x[j];
    return acc;
}

nlohmann::json LinearRegressor::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    if (kind_ == RegressorKind::ridge) j["hyperparameters"] = {{"lambda", params_.ridge_lambda}};
    if (kind_ == RegressorKind::lasso)
        j["hyperparameters"] = {{"lambda", params_.lasso_lambda}, {"tol", params_.lasso_tol},
                                {"max_sweeps", params_.lasso_max_sweeps}, {"sweeps_used", sweeps_}};
    j["coefficients"] = theta_;
    j["intercept"] = intercept_;
    j["warnings"] = warnings_;
    return j;
}

}  // namespace alsched
