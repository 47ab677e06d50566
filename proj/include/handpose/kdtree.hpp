#pragma once

#include "handpose/geometry.hpp"

#include <cstdint>
#include <vector>

namespace handpose {

/// Balanced kd-tree over a point cloud: median split on the widest-spread
/// axis, leaf size 16. Immutable after construction and safe to share across
/// threads. Queries return exactly the linear-scan answer; equidistant
/// nearest-neighbor ties resolve to the smallest stored index.
class NNIndex {
 public:
  explicit NNIndex(const PointCloud& cloud);

  struct Hit {
    std::size_t index;
    double distance;
  };

  Hit nearest(const Vec3& q) const;

  /// Indices of all stored points with distance <= r, ascending.
  std::vector<std::size_t> radius_search(const Vec3& q, double r) const;

  std::size_t size() const { return pts_.size(); }
  const Vec3& point(std::size_t i) const { return pts_[i]; }

 private:
  static constexpr std::size_t kLeafSize = 16;

  struct Node {
    double split = 0.0;
    int axis = -1;  // -1 marks a leaf
    std::uint32_t left = 0;
    std::uint32_t right = 0;  // children for internal nodes, [begin,end) for leaves
  };

  std::vector<Vec3> pts_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void nearest_rec(std::uint32_t node, const Vec3& q, std::size_t& best_idx,
                   double& best_d2) const;
  void radius_rec(std::uint32_t node, const Vec3& q, double r2,
                  std::vector<std::size_t>& out) const;
};

/// RMS of nearest distances from each cloud point into the index.
double rms_nearest(const PointCloud& cloud, const NNIndex& index);

}  // namespace handpose
