#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "alsched/clustering.hpp"

using namespace alsched;

namespace {

Matrix blobs(std::size_t k, std::size_t per, double spread, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t i = 0; i < per; ++i)
            x.append_row(std::vector<double>{100.0 * c + rng.normal(0, spread), 50.0 * (c % 3) + rng.normal(0, spread)});
    return x;
}

double mean_dist(const Matrix& x, std::size_t i, const std::vector<std::size_t>& members) {
    double s = 0;
    std::size_t n = 0;
    for (auto j : members) {
        if (j == i) continue;
        s += euclidean_distance(x.row(i), x.row(j));
        ++n;
    }
    return n ? s / n : 0.0;
}

}  // namespace

TEST(Kmeans, SeparatedBlobs) {
    auto x = Matrix::from_rows({{0, 0}, {0, 2}, {10, 10}, {10, 12}});
    auto c = kmeans(x, 2, 1);
    EXPECT_EQ(c.assignment[0], c.assignment[1]);
    EXPECT_EQ(c.assignment[2], c.assignment[3]);
    EXPECT_NE(c.assignment[0], c.assignment[2]);
    const auto a = c.assignment[0];
    EXPECT_NEAR(c.centroids(a, 0), 0.0, 1e-12);
    EXPECT_NEAR(c.centroids(a, 1), 1.0, 1e-12);
    EXPECT_NEAR(c.centroids(1 - a, 0), 10.0, 1e-12);
    EXPECT_NEAR(c.centroids(1 - a, 1), 11.0, 1e-12);
}

TEST(Kmeans, SingleCluster) {
    auto x = blobs(3, 10, 1.0, 2);
    auto c = kmeans(x, 1, 0);
    for (std::size_t j = 0; j < 2; ++j) {
        const auto col = x.column(j);
        EXPECT_NEAR(c.centroids(0, j), std::accumulate(col.begin(), col.end(), 0.0) / 30.0, 1e-9);
    }
    EXPECT_EQ(c.cluster_size(0), 30u);
}

TEST(Kmeans, OneClusterPerPoint) {
    auto x = blobs(2, 4, 3.0, 3);
    auto c = kmeans(x, 8, 0);
    EXPECT_NEAR(within_cluster_ss(x, c), 0.0, 1e-12);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(c.cluster_size(k), 1u);
}

TEST(Kmeans, TooFewSamples) { EXPECT_THROW(kmeans(Matrix::from_rows({{1}, {2}}), 3, 0), Error); }

TEST(Kmeans, WcssNonIncreasing) {
    auto x = blobs(5, 20, 30.0, 4);
    auto c = kmeans(x, 5, 7);
    ASSERT_FALSE(c.wcss_history.empty());
    for (std::size_t i = 1; i < c.wcss_history.size(); ++i) EXPECT_LE(c.wcss_history[i], c.wcss_history[i - 1] + 1e-9);
    EXPECT_NEAR(c.wcss_history.back(), within_cluster_ss(x, c), 1e-6);
}

TEST(Kmeans, Deterministic) {
    auto x = blobs(4, 15, 20.0, 5);
    auto a = kmeans(x, 4, 11);
    auto b = kmeans(x, 4, 11);
    EXPECT_EQ(a.assignment, b.assignment);
    EXPECT_EQ(a.centroids, b.centroids);
}

TEST(Silhouette, PerfectCohesion) {
    auto x = Matrix::from_rows({{0, 0}, {0, 0}, {0, 0}, {100, 0}, {100, 1}});
    auto c = kmeans(x, 2, 0);
    EXPECT_NEAR(silhouette(x, c, 0), 1.0, 1e-12);
}

TEST(Silhouette, Equidistant) {
    Clustering c;
    c.k = 2;
    c.centroids = Matrix::from_rows({{-1}, {1}});
    c.assignment = {0, 0, 1};
    auto x = Matrix::from_rows({{-1}, {1}, {3}});
    // point 1: a = 2 (to -1), b = 2 (to 3)
    EXPECT_NEAR(silhouette(x, c, 1), 0.0, 1e-12);
}

TEST(Silhouette, FourPointFormula) {
    auto x = Matrix::from_rows({{0, 0}, {1, 0}, {10, 0}, {11, 0}});
    Clustering c;
    c.k = 2;
    c.centroids = Matrix::from_rows({{0.5, 0}, {10.5, 0}});
    c.assignment = {0, 0, 1, 1};
    // a = 1, b = (10 + 11)/2 = 10.5 -> 1 - 1/10.5 for the outer points, (9+10)/2 = 9.5 for the inner
    EXPECT_NEAR(silhouette(x, c, 0), 1.0 - 1.0 / 10.5, 1e-12);
    EXPECT_NEAR(silhouette(x, c, 1), 1.0 - 1.0 / 9.5, 1e-12);
    EXPECT_NEAR(silhouette(x, c, 2), 1.0 - 1.0 / 9.5, 1e-12);
    EXPECT_NEAR(silhouette(x, c, 3), 1.0 - 1.0 / 10.5, 1e-12);
    auto all = silhouettes(x, c);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(all[i], silhouette(x, c, i), 1e-12);
}

TEST(Silhouette, BruteForce) {
    auto x = blobs(4, 10, 25.0, 6);
    auto c = kmeans(x, 4, 3);
    auto all = silhouettes(x, c);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double a = mean_dist(x, i, c.members(c.assignment[i]));
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < 4; ++k)
            if (k != c.assignment[i] && c.cluster_size(k)) b = std::min(b, mean_dist(x, i, c.members(k)));
        const double s = (b - a) / std::max(a, b);
        EXPECT_NEAR(all[i], s, 1e-9);
        EXPECT_GE(all[i], -1.0);
        EXPECT_LE(all[i], 1.0);
    }
}

TEST(Silhouette, SingleClusterUndefined) {
    auto x = Matrix::from_rows({{0}, {1}, {2}});
    auto c = kmeans(x, 1, 0);
    EXPECT_THROW(silhouette(x, c, 0), Error);
}

TEST(Medoid, Cases) {
    Clustering c;
    c.k = 2;
    c.centroids = Matrix::from_rows({{0}, {5}});
    c.assignment = {0, 0, 0, 1};
    auto x = Matrix::from_rows({{-1}, {0}, {1}, {5}});
    EXPECT_EQ(medoid(x, c, 0), 1u);
    EXPECT_EQ(medoid(x, c, 1), 3u);
}

TEST(Medoid, BruteForce) {
    auto x = blobs(1, 20, 5.0, 8);
    auto c = kmeans(x, 1, 0);
    std::size_t best = 0;
    for (std::size_t i = 1; i < 20; ++i)
        if (euclidean_distance(x.row(i), c.centroids.row(0)) < euclidean_distance(x.row(best), c.centroids.row(0)))
            best = i;
    EXPECT_EQ(medoid(x, c, 0), best);
}
