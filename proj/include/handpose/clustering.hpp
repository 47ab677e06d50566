#pragma once

#include "handpose/geometry.hpp"

#include <cstdint>
#include <vector>

namespace handpose {

/// Per-point labels: -1 marks noise, 0..cluster_count-1 are cluster ids
/// assigned in order of first discovery.
struct ClusterLabeling {
  std::vector<int> labels;
  int cluster_count = 0;
};

struct DbscanConfig {
  double eps = 0.02;  // neighborhood radius, meters
  int min_pts = 10;   // neighbor count to qualify as a core point, self included
};

/// Density clustering: core points grow clusters through density-reachable
/// neighbors, border points adopt the cluster of the first core point that
/// reaches them, everything else stays noise. Points are visited in stored
/// order, so results are deterministic for a given input order.
ClusterLabeling dbscan(const PointCloud& cloud, const DbscanConfig& cfg);

/// Connected components of the fixed-radius neighbor graph; components
/// smaller than min_size become noise.
ClusterLabeling euclidean_cluster_extraction(const PointCloud& cloud, double radius, int min_size);

struct KmeansTrace {
  std::vector<double> wcss;  // within-cluster sum of squares after each Lloyd iteration
};

/// Lloyd iterations from a Forgy start (k distinct points chosen by seed).
/// Empty clusters are reseeded at the point farthest from its assigned
/// centroid. Never produces noise labels.
ClusterLabeling kmeans(const PointCloud& cloud, int k, std::uint64_t seed, int max_iters,
                       KmeansTrace* trace = nullptr);

/// One cloud per cluster id in ascending order; noise points are dropped and
/// point order within each cluster is preserved.
std::vector<PointCloud> extract_clusters(const PointCloud& cloud, const ClusterLabeling& labeling);

}  // namespace handpose
