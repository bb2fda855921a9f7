#include "alsched/common.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace alsched {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m;
    if (rows.empty()) return m;
    m.cols_ = rows.front().size();
    for (const auto& r : rows) m.append_row(r);
    return m;
}

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && data_.empty()) cols_ = values.size();
    if (values.size() != cols_) throw DimensionError(cols_, values.size());
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

namespace {

Standardizer fit_rows(std::span<const Matrix* const> parts) {
    std::size_t d = 0;
    std::size_t n = 0;
    for (const Matrix* m : parts) {
        if (m->rows() == 0) continue;
        d = m->cols();
        n += m->rows();
    }
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    if (n == 0) return s;
    for (const Matrix* m : parts)
        for (std::size_t r = 0; r < m->rows(); ++r)
            for (std::size_t c = 0; c < d; ++c) s.mean[c] += (*m)(r, c);
    for (auto& v : s.mean) v /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (const Matrix* m : parts)
        for (std::size_t r = 0; r < m->rows(); ++r)
            for (std::size_t c = 0; c < d; ++c) {
                const double dev = (*m)(r, c) - s.mean[c];
                var[c] += dev * dev;
            }
    for (std::size_t c = 0; c < d; ++c) {
        const double sd = std::sqrt(var[c] / static_cast<double>(n));
        s.scale[c] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

}  // namespace

Standardizer Standardizer::fit(const Matrix& x) {
    const Matrix* parts[] = {&x};
    return fit_rows(parts);
}

Standardizer Standardizer::fit(const Matrix& a, const Matrix& b) {
    const Matrix* parts[] = {&a, &b};
    return fit_rows(parts);
}

std::vector<double> Standardizer::transform(std::span<const double> row) const {
    if (row.size() != mean.size()) throw DimensionError(mean.size(), row.size());
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) out[c] = (row[c] - mean[c]) / scale[c];
    return out;
}

Matrix Standardizer::transform(const Matrix& x) const {
    if (x.rows() > 0 && x.cols() != mean.size()) throw DimensionError(mean.size(), x.cols());
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index on empty range");
    // rejection sampling keeps the draw exactly uniform
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return static_cast<std::size_t>(v % bound);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) throw BudgetError("cannot draw " + std::to_string(k) + " of " + std::to_string(n));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + index(n - i);
        std::swap(perm[i], perm[j]);
    }
    perm.resize(k);
    return perm;
}

std::string fingerprint(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace alsched
