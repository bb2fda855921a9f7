#include "alsched/clustering.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace alsched {

namespace {

constexpr int kMaxIterations = 300;

std::size_t nearest_centroid(std::span<const double> row, const Matrix& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        const double d = squared_distance(row, centroids.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

Matrix seed_plus_plus(const Matrix& x, std::size_t k, Rng& rng) {
    const std::size_t n = x.rows();
    Matrix centroids(k, x.cols());
    std::vector<char> chosen(n, 0);
    std::size_t first = rng.index(n);
    chosen[first] = 1;
    std::copy(x.row(first).begin(), x.row(first).end(), centroids.row(0).begin());
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i), centroids.row(0));

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
        std::size_t pick = n;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i] || d2[i] <= 0.0) continue;
                target -= d2[i];
                pick = i;
                if (target < 0.0) break;
            }
        }
        if (pick == n) {
            // all remaining points coincide with a centroid
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) rest.push_back(i);
            pick = rest[rng.index(rest.size())];
        }
        chosen[pick] = 1;
        std::copy(x.row(pick).begin(), x.row(pick).end(), centroids.row(c).begin());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(x.row(i), centroids.row(c)));
    }
    return centroids;
}

void update_centroids(const Matrix& x, Clustering& cl) {
    std::vector<std::size_t> counts(cl.k, 0);
    cl.centroids = Matrix(cl.k, x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto dst = cl.centroids.row(cl.assignment[i]);
        auto src = x.row(i);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
        ++counts[cl.assignment[i]];
    }
    for (std::size_t c = 0; c < cl.k; ++c)
        for (auto& v : cl.centroids.row(c)) v /= static_cast<double>(counts[c]);
}

// Moves the point farthest from its centroid (among clusters with more than
// one member) into each empty cluster. Returns true if anything moved.
bool repair_empty(const Matrix& x, Clustering& cl) {
    bool moved = false;
    for (std::size_t c = 0; c < cl.k; ++c) {
        if (cl.cluster_size(c) > 0) continue;
        std::vector<std::size_t> sizes(cl.k, 0);
        for (auto a : cl.assignment) ++sizes[a];
        std::size_t far = x.rows();
        double far_d = -1.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (sizes[cl.assignment[i]] < 2) continue;
            const double d = squared_distance(x.row(i), cl.centroids.row(cl.assignment[i]));
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far == x.rows()) break;
        cl.assignment[far] = c;
        std::copy(x.row(far).begin(), x.row(far).end(), cl.centroids.row(c).begin());
        moved = true;
    }
    return moved;
}

}  // namespace

std::vector<std::size_t> Clustering::members(std::size_t cluster) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == cluster) out.push_back(i);
    return out;
}

std::size_t Clustering::cluster_size(std::size_t cluster) const {
    return static_cast<std::size_t>(std::count(assignment.begin(), assignment.end(), cluster));
}

double within_cluster_ss(const Matrix& x, const Clustering& clustering) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) acc += squared_distance(x.row(i), clustering.centroids.row(clustering.assignment[i]));
    return acc;
}

Clustering kmeans(const Matrix& x, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw Error("kmeans: K must be at least 1");
    if (x.rows() < k)
        throw Error("kmeans: " + std::to_string(x.rows()) + " samples cannot form " + std::to_string(k) + " clusters");

    Rng rng(seed);
    Clustering cl;
    cl.k = k;
    cl.centroids = seed_plus_plus(x, k, rng);
    cl.assignment.assign(x.rows(), 0);
    for (std::size_t i = 0; i < x.rows(); ++i) cl.assignment[i] = nearest_centroid(x.row(i), cl.centroids);
    repair_empty(x, cl);
    update_centroids(x, cl);
    cl.wcss_history.push_back(within_cluster_ss(x, cl));

    for (cl.iterations = 1; cl.iterations <= kMaxIterations; ++cl.iterations) {
        std::vector<std::size_t> next(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            // stay put on exact ties so the fixed point is well defined
            const std::size_t best = nearest_centroid(x.row(i), cl.centroids);
            const double cur = squared_distance(x.row(i), cl.centroids.row(cl.assignment[i]));
            const double alt = squared_distance(x.row(i), cl.centroids.row(best));
            next[i] = alt < cur ? best : cl.assignment[i];
        }
        const bool changed = next != cl.assignment;
        cl.assignment = std::move(next);
        repair_empty(x, cl);
        update_centroids(x, cl);
        const double wcss = within_cluster_ss(x, cl);
        assert(wcss <= cl.wcss_history.back() * (1.0 + 1e-9) + 1e-12);
        cl.wcss_history.push_back(wcss);
        if (!changed) break;
    }
    cl.iterations = std::min(cl.iterations, kMaxIterations);
    return cl;
}

namespace {

struct SilhouetteParts {
    double a;
    double b;
};

SilhouetteParts silhouette_parts(const Matrix& x, const Clustering& cl, std::size_t index,
                                 const std::vector<std::size_t>& sizes) {
    std::vector<double> sums(cl.k, 0.0);
    for (std::size_t j = 0; j < x.rows(); ++j) {
        if (j == index) continue;
        sums[cl.assignment[j]] += euclidean_distance(x.row(index), x.row(j));
    }
    const std::size_t own = cl.assignment[index];
    const double a = sizes[own] > 1 ? sums[own] / static_cast<double>(sizes[own] - 1) : 0.0;
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cl.k; ++c) {
        if (c == own || sizes[c] == 0) continue;
        b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    return {a, b};
}

std::vector<std::size_t> sizes_checked(const Clustering& cl) {
    std::vector<std::size_t> sizes(cl.k, 0);
    for (auto a : cl.assignment) ++sizes[a];
    if (std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }) < 2)
        throw Error("silhouette is undefined for a single cluster");
    return sizes;
}

double coefficient(SilhouetteParts p) {
    const double denom = std::max(p.a, p.b);
    return denom > 0.0 ? (p.b - p.a) / denom : 0.0;
}

}  // namespace

double silhouette(const Matrix& x, const Clustering& clustering, std::size_t index) {
    const auto sizes = sizes_checked(clustering);
    if (index >= x.rows()) throw std::out_of_range("silhouette: sample index out of range");
    return coefficient(silhouette_parts(x, clustering, index, sizes));
}

std::vector<double> silhouettes(const Matrix& x, const Clustering& clustering) {
    const auto sizes = sizes_checked(clustering);
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = coefficient(silhouette_parts(x, clustering, i, sizes));
    return out;
}

std::size_t medoid(const Matrix& x, const Clustering& clustering, std::size_t cluster) {
    std::size_t best = x.rows();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (clustering.assignment[i] != cluster) continue;
        const double d = squared_distance(x.row(i), clustering.centroids.row(cluster));
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    if (best == x.rows()) throw Error("medoid: cluster " + std::to_string(cluster) + " is empty");
    return best;
}

}  // namespace alsched
