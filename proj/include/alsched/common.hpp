#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace alsched {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input file or schema does not have the required structure.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A single CSV row could not be interpreted. Carries the 1-based line number.
class RowError : public Error {
public:
    RowError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConflictError : public Error {
public:
    using Error::Error;
};

class ImputationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    DimensionError(std::size_t expected, std::size_t actual)
        : Error("dimension mismatch: expected d=" + std::to_string(expected) +
                ", got d=" + std::to_string(actual)),
          expected_(expected),
          actual_(actual) {}
    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

class NotFittedError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

/// The strategy cannot run on the current request (no model, too few labels...).
/// The scheduler answers this with a random fallback.
class StrategyUnavailable : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Dense row-major matrix
// ---------------------------------------------------------------------------

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    void append_row(std::span<const double> values);
    Matrix select_rows(std::span<const std::size_t> indices) const;
    std::vector<double> column(std::size_t c) const;

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Column standardization
// ---------------------------------------------------------------------------

/// Per-column mean / standard deviation (population). Zero deviations are
/// replaced by 1 so constant columns map to 0.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const Matrix& x);
    static Standardizer fit(const Matrix& a, const Matrix& b);  // statistics of the union

    std::size_t dim() const noexcept { return mean.size(); }
    std::vector<double> transform(std::span<const double> row) const;
    Matrix transform(const Matrix& x) const;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

/// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Seeded generator with platform-independent transforms (the std
/// distributions are implementation-defined, which would break bit-exact
/// reproducibility across standard libraries).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer on [0, n).
    std::size_t index(std::size_t n);
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// FNV-1a 64-bit hash rendered as 16 hex digits.
std::string fingerprint(std::string_view text);

}  // namespace alsched
