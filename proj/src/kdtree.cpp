#include "handpose/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace handpose {

NNIndex::NNIndex(const PointCloud& cloud) : pts_(cloud.points) {
  if (pts_.empty()) throw std::invalid_argument("NNIndex: empty cloud");
  order_.resize(pts_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(pts_.size()));
}

std::uint32_t NNIndex::build(std::uint32_t begin, std::uint32_t end) {
  const std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  if (end - begin <= kLeafSize) {
    nodes_[id].axis = -1;
    nodes_[id].left = begin;
    nodes_[id].right = end;
    return id;
  }
  Vec3 lo = pts_[order_[begin]], hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(pts_[order_[i]]);
    hi = hi.cwiseMax(pts_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return pts_[a][axis] < pts_[b][axis]; });
  const double split = pts_[order_[mid]][axis];
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

NNIndex::Hit NNIndex::nearest(const Vec3& q) const {
  std::size_t best_idx = pts_.size();
  double best_d2 = std::numeric_limits<double>::infinity();
  nearest_rec(0, q, best_idx, best_d2);
  return {best_idx, std::sqrt(best_d2)};
}

void NNIndex::nearest_rec(std::uint32_t node, const Vec3& q, std::size_t& best_idx,
                          double& best_d2) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (std::uint32_t i = n.left; i < n.right; ++i) {
      const std::size_t idx = order_[i];
      const double d2 = (pts_[idx] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
        best_d2 = d2;
        best_idx = idx;
      }
    }
    return;
  }
  const double dx = q[n.axis] - n.split;
  const std::uint32_t near = dx < 0.0 ? n.left : n.right;
  const std::uint32_t far = dx < 0.0 ? n.right : n.left;
  nearest_rec(near, q, best_idx, best_d2);
  // The far half-space may still hold an equally near point with a smaller
  // index, so recurse on equality too.
  if (dx * dx <= best_d2) nearest_rec(far, q, best_idx, best_d2);
}

std::vector<std::size_t> NNIndex::radius_search(const Vec3& q, double r) const {
  if (!(r > 0.0)) throw std::invalid_argument("radius_search: radius must be positive");
  std::vector<std::size_t> out;
  radius_rec(0, q, r * r, out);
  std::sort(out.begin(), out.end());
  return out;
}

void NNIndex::radius_rec(std::uint32_t node, const Vec3& q, double r2,
                         std::vector<std::size_t>& out) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (std::uint32_t i = n.left; i < n.right; ++i) {
      const std::size_t idx = order_[i];
      if ((pts_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
    }
    return;
  }
  const double dx = q[n.axis] - n.split;
  if (dx < 0.0) {
    radius_rec(n.left, q, r2, out);
    if (dx * dx <= r2) radius_rec(n.right, q, r2, out);
  } else {
    radius_rec(n.right, q, r2, out);
    if (dx * dx <= r2) radius_rec(n.left, q, r2, out);
  }
}

double rms_nearest(const PointCloud& cloud, const NNIndex& index) {
  if (cloud.empty()) throw std::invalid_argument("rms_nearest: empty cloud");
  double sum = 0.0;
  for (const Vec3& p : cloud) {
    const auto hit = index.nearest(p);
    sum += hit.distance * hit.distance;
  }
  return std::sqrt(sum / static_cast<double>(cloud.size()));
}

}  // namespace handpose
