#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alsched/regressors.hpp"

namespace alsched::detail {

/// Column-major copy of a design matrix plus, per feature, row indices
/// sorted by value (ties by row index). Shared by every tree of an ensemble.
struct ColumnData {
    explicit ColumnData(const Matrix& x);

    std::size_t rows;
    std::size_t cols;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<int>> order;
};

TreeModel grow_tree(const ColumnData& data, const Matrix& targets, std::span<const double> weights,
                    const TreeOptions& options, std::uint64_t seed);

/// Row permutation sorting rows lexicographically by (features, label), so
/// ensembles do not depend on the caller's row order.
std::vector<std::size_t> canonical_order(const Matrix& x, std::span<const double> y);

}  // namespace alsched::detail
