#pragma once

#include <cstdint>
#include <vector>

#include "alsched/common.hpp"

namespace alsched {

struct Clustering {
    std::size_t k = 0;
    Matrix centroids;                     // k x d
    std::vector<std::size_t> assignment;  // sample index -> cluster index
    std::vector<double> wcss_history;     // within-cluster sum of squares per Lloyd step
    int iterations = 0;

    std::vector<std::size_t> members(std::size_t cluster) const;
    std::size_t cluster_size(std::size_t cluster) const;
};

/// Lloyd's algorithm with k-means++ seeding. Stops at an assignment fixed
/// point or after 300 iterations. Empty clusters take the point farthest
/// from its centroid. Distances are Euclidean on the rows as given.
Clustering kmeans(const Matrix& x, std::size_t k, std::uint64_t seed);

/// Within-cluster sum of squared distances to the centroids.
double within_cluster_ss(const Matrix& x, const Clustering& clustering);

/// Silhouette coefficient of one sample; singleton clusters have a = 0.
/// Throws Error when fewer than two clusters are non-empty.
double silhouette(const Matrix& x, const Clustering& clustering, std::size_t index);

/// Silhouettes of all samples, sharing one distance pass per sample.
std::vector<double> silhouettes(const Matrix& x, const Clustering& clustering);

/// Member of `cluster` closest to its centroid; ties to the lowest index.
std::size_t medoid(const Matrix& x, const Clustering& clustering, std::size_t cluster);

}  // namespace alsched
