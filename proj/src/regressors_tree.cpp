#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "alsched/regressors.hpp"
#include "tree_internal.hpp"

namespace alsched {

std::span<const double> TreeModel::leaf_values(std::span<const double> x) const {
    int idx = 0;
    while (nodes[idx].feature >= 0) {
        const Node& n = nodes[idx];
        idx = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return {values.data() + nodes[idx].value_offset, static_cast<std::size_t>(outputs)};
}

nlohmann::json TreeModel::to_json() const {
    nlohmann::json j;
    j["outputs"] = outputs;
    auto& arr = j["nodes"] = nlohmann::json::array();
    for (const auto& n : nodes) {
        if (n.feature < 0) {
            arr.push_back({{"leaf", std::vector<double>(values.begin() + n.value_offset,
                                                        values.begin() + n.value_offset + outputs)}});
        } else {
            arr.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
        }
    }
    return j;
}

void TreeModel::pack() {
    packed_.clear();
    packed_value_.clear();
    depth_ = 0;
    if (nodes.empty()) return;
    // (original index, depth) in breadth-first order; slot i of `queue` becomes packed node i
    std::vector<std::pair<int, int>> queue{{0, 0}};
    packed_.reserve(nodes.size());
    for (std::size_t i = 0; i < queue.size(); ++i) {
        const auto [orig, depth] = queue[i];
        const Node& n = nodes[static_cast<std::size_t>(orig)];
        if (n.feature < 0) {
            // NaN threshold always steps right, so child + 1 lands on itself
            packed_.push_back({std::numeric_limits<double>::quiet_NaN(), 0, static_cast<int>(i) - 1});
            packed_value_.push_back(values[static_cast<std::size_t>(n.value_offset)]);
            depth_ = std::max(depth_, depth);
        } else {
            packed_.push_back({n.threshold, n.feature, static_cast<int>(queue.size())});
            packed_value_.push_back(0.0);
            queue.emplace_back(n.left, depth + 1);
            queue.emplace_back(n.right, depth + 1);
        }
    }
}

void TreeModel::accumulate(const Matrix& x, std::span<double> out, double scale) const {
    constexpr std::size_t kBlock = 8;
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const double* data = x.data().data();
    const PackedNode* nodes_p = packed_.data();
    std::size_t i0 = 0;
    for (; i0 + kBlock <= n; i0 += kBlock) {
        int idx[kBlock] = {};
        for (int step = 0; step < depth_; ++step)
            for (std::size_t k = 0; k < kBlock; ++k) {
                const PackedNode& nd = nodes_p[idx[k]];
                idx[k] = nd.child + static_cast<int>(!(data[(i0 + k) * d + static_cast<std::size_t>(nd.feature)] <= nd.threshold));
            }
        for (std::size_t k = 0; k < kBlock; ++k) out[i0 + k] += scale * packed_value_[static_cast<std::size_t>(idx[k])];
    }
    for (; i0 < n; ++i0) {
        int idx = 0;
        for (int step = 0; step < depth_; ++step) {
            const PackedNode& nd = nodes_p[idx];
            idx = nd.child + static_cast<int>(!(data[i0 * d + static_cast<std::size_t>(nd.feature)] <= nd.threshold));
        }
        out[i0] += scale * packed_value_[static_cast<std::size_t>(idx)];
    }
}

namespace detail {

ColumnData::ColumnData(const Matrix& x) : rows(x.rows()), cols(x.cols()), values(x.cols(), std::vector<double>(x.rows())) {
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) values[j][i] = x(i, j);
    order.resize(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        auto& o = order[j];
        o.resize(rows);
        std::iota(o.begin(), o.end(), 0);
        const auto& col = values[j];
        std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return col[a] < col[b]; });
    }
}

namespace {

class TreeGrower {
public:
    TreeGrower(const ColumnData& data, const Matrix& targets, std::span<const double> weights, const TreeOptions& options,
               std::uint64_t seed)
        : data_(data), targets_(targets), weights_(weights), options_(options), rng_(seed), m_(targets.cols()) {
        order_.resize(data.cols);
        for (std::size_t f = 0; f < data.cols; ++f) {
            auto& dst = order_[f];
            dst.reserve(data.rows);
            for (int r : data.order[f])
                if (weights_[r] > 0.0) dst.push_back(r);
        }
        goes_left_.assign(data.rows, 0);
        buffer_.resize(order_.empty() ? 0 : order_[0].size());
        features_.resize(data.cols);
        std::iota(features_.begin(), features_.end(), 0);
        sum_.resize(m_);
        left_.resize(m_);
        tree_.outputs = static_cast<int>(m_);
    }

    TreeModel grow() {
        const std::size_t n = order_.empty() ? 0 : order_[0].size();
        if (n == 0) throw InsufficientDataError("tree: no rows with positive weight");
        build(0, n, 0, 0);
        tree_.pack();
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        std::size_t left_count = 0;
        double threshold = 0.0;
        double score = 0.0;
    };

    int make_leaf(double weight) {
        TreeModel::Node node;
        node.value_offset = static_cast<int>(tree_.values.size());
        for (std::size_t k = 0; k < m_; ++k) tree_.values.push_back(sum_[k] / weight);
        tree_.nodes.push_back(node);
        return static_cast<int>(tree_.nodes.size()) - 1;
    }

    // rows of the node are order_[key][begin, end)
    int build(std::size_t begin, std::size_t end, int depth, int key) {
        const auto& rows = order_[static_cast<std::size_t>(key)];
        double w_total = 0.0;
        double sq_total = 0.0;
        std::fill(sum_.begin(), sum_.end(), 0.0);
        for (std::size_t p = begin; p < end; ++p) {
            const int r = rows[p];
            const double w = weights_[r];
            w_total += w;
            for (std::size_t k = 0; k < m_; ++k) {
                const double t = targets_(r, k);
                sum_[k] += w * t;
                sq_total += w * t * t;
            }
        }
        double parent_score = 0.0;
        for (std::size_t k = 0; k < m_; ++k) parent_score += sum_[k] * sum_[k] / w_total;
        const double sse = sq_total - parent_score;
        const double eps = 1e-12 * std::max(1.0, sq_total);

        if (depth >= options_.max_depth || w_total < 2.0 * options_.min_leaf || sse <= eps) return make_leaf(w_total);

        // candidate features, ascending
        std::size_t n_candidates = data_.cols;
        if (options_.max_features > 0 && static_cast<std::size_t>(options_.max_features) < data_.cols) {
            n_candidates = static_cast<std::size_t>(options_.max_features);
            for (std::size_t i = 0; i < n_candidates; ++i) std::swap(features_[i], features_[i + rng_.index(data_.cols - i)]);
            std::sort(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(n_candidates));
        }

        Split best;
        best.score = parent_score + eps;
        const std::vector<double> node_sum = sum_;
        for (std::size_t c = 0; c < n_candidates; ++c) {
            const int f = features_[c];
            scan_feature(f, begin, end, w_total, node_sum, best);
        }
        if (best.feature < 0) {
            sum_ = node_sum;
            return make_leaf(w_total);
        }

        const auto& split_order = order_[best.feature];
        double w_left = 0.0;
        for (std::size_t p = begin; p < begin + best.left_count; ++p) w_left += weights_[split_order[p]];
        const double leaf_below = 2.0 * options_.min_leaf;
        const bool children_are_leaves =
            depth + 1 >= options_.max_depth || (w_left < leaf_below && w_total - w_left < leaf_below);
        int child_key = best.feature;
        if (!children_are_leaves) {
            child_key = key;
            partition(begin, end, best);
        }

        const int self = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back(TreeModel::Node{best.feature, best.threshold, -1, -1, 0});
        const int left = build(begin, begin + best.left_count, depth + 1, child_key);
        const int right = build(begin + best.left_count, end, depth + 1, child_key);
        tree_.nodes[self].left = left;
        tree_.nodes[self].right = right;
        return self;
    }

    // Stable partition of every feature's order into left and right children.
    void partition(std::size_t begin, std::size_t end, const Split& best) {
        const auto& split_order = order_[best.feature];
        for (std::size_t p = begin; p < begin + best.left_count; ++p) goes_left_[split_order[p]] = 1;
        for (std::size_t f = 0; f < data_.cols; ++f) {
            if (static_cast<int>(f) == best.feature) continue;
            auto& o = order_[f];
            std::size_t li = begin;
            std::size_t ri = 0;
            for (std::size_t p = begin; p < end; ++p) {
                const int r = o[p];
                if (goes_left_[r])
                    o[li++] = r;
                else
                    buffer_[ri++] = r;
            }
            std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(ri), o.begin() + static_cast<std::ptrdiff_t>(li));
        }
        for (std::size_t p = begin; p < begin + best.left_count; ++p) goes_left_[split_order[p]] = 0;
    }

    void scan_feature(int f, std::size_t begin, std::size_t end, double w_total, const std::vector<double>& node_sum,
                      Split& best) {
        const auto& o = order_[f];
        const auto& col = data_.values[f];
        const double min_leaf = options_.min_leaf;
        double w_left = 0.0;
        if (m_ == 1) {
            const double total = node_sum[0];
            double s_left = 0.0;
            for (std::size_t p = begin; p + 1 < end; ++p) {
                const int r = o[p];
                const double w = weights_[r];
                w_left += w;
                s_left += w * targets_(r, 0);
                const double v = col[r];
                const double next = col[o[p + 1]];
                if (!(v < next)) continue;
                const double w_right = w_total - w_left;
                if (w_left < min_leaf || w_right < min_leaf) continue;
                const double s_right = total - s_left;
                const double score = s_left * s_left / w_left + s_right * s_right / w_right;
                if (score > best.score) {
                    best = {f, p + 1 - begin, split_point(v, next), score};
                }
            }
            return;
        }
        std::fill(left_.begin(), left_.end(), 0.0);
        for (std::size_t p = begin; p + 1 < end; ++p) {
            const int r = o[p];
            const double w = weights_[r];
            w_left += w;
            for (std::size_t k = 0; k < m_; ++k) left_[k] += w * targets_(r, k);
            const double v = col[r];
            const double next = col[o[p + 1]];
            if (!(v < next)) continue;
            const double w_right = w_total - w_left;
            if (w_left < min_leaf || w_right < min_leaf) continue;
            double score = 0.0;
            for (std::size_t k = 0; k < m_; ++k) {
                const double sr = node_sum[k] - left_[k];
                score += left_[k] * left_[k] / w_left + sr * sr / w_right;
            }
            if (score > best.score) best = {f, p + 1 - begin, split_point(v, next), score};
        }
    }

    static double split_point(double lo, double hi) {
        const double mid = lo + 0.5 * (hi - lo);
        return mid < hi ? mid : lo;
    }

    const ColumnData& data_;
    const Matrix& targets_;
    std::span<const double> weights_;
    TreeOptions options_;
    Rng rng_;
    std::size_t m_;
    std::vector<std::vector<int>> order_;
    std::vector<char> goes_left_;
    std::vector<int> buffer_;
    std::vector<int> features_;
    std::vector<double> sum_;
    std::vector<double> left_;
    TreeModel tree_;
};

}  // namespace

TreeModel grow_tree(const ColumnData& data, const Matrix& targets, std::span<const double> weights,
                    const TreeOptions& options, std::uint64_t seed) {
    if (options.min_leaf < 1) throw std::invalid_argument("tree: min_leaf must be at least 1");
    if (options.max_depth < 0) throw std::invalid_argument("tree: max_depth must be non-negative");
    return TreeGrower(data, targets, weights, options, seed).grow();
}

std::vector<std::size_t> canonical_order(const Matrix& x, std::span<const double> y) {
    std::vector<std::size_t> idx(x.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        auto ra = x.row(a);
        auto rb = x.row(b);
        for (std::size_t j = 0; j < ra.size(); ++j)
            if (ra[j] != rb[j]) return ra[j] < rb[j];
        return y[a] < y[b];
    });
    return idx;
}

}  // namespace detail

TreeModel grow_tree(const Matrix& x, const Matrix& targets, std::span<const double> weights, const TreeOptions& options,
                    std::uint64_t seed) {
    if (targets.rows() != x.rows() || weights.size() != x.rows())
        throw std::invalid_argument("grow_tree: rows of x, targets and weights differ");
    return detail::grow_tree(detail::ColumnData(x), targets, weights, options, seed);
}

}  // namespace alsched
