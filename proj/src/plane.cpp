#include "handpose/plane.hpp"

#include "handpose/errors.hpp"
#include "handpose/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace handpose {

PlaneModel plane_from_points(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u = b - a;
  const Vec3 v = c - a;
  const Vec3 cross = u.cross(v);
  const double scale = u.norm() * v.norm();
  if (scale <= 0.0 || cross.norm() <= 1e-9 * scale) {
    throw DegenerateError("plane_from_points: degenerate sample");
  }
  PlaneModel plane;
  plane.n = cross.normalized();
  plane.d = -plane.n.dot(a);
  return plane;
}

double point_plane_distance(const Vec3& p, const PlaneModel& plane) {
  return std::abs(plane.n.dot(p) + plane.d);
}

namespace {

// Total least squares: normal is the smallest-eigenvector direction of the
// demeaned scatter matrix.
PlaneModel fit_plane_lsq(const PointCloud& cloud, const std::vector<std::size_t>& idx) {
  Vec3 mu = Vec3::Zero();
  for (std::size_t i : idx) mu += cloud[i];
  mu /= static_cast<double>(idx.size());
  Mat3 scatter = Mat3::Zero();
  for (std::size_t i : idx) {
    const Vec3 d = cloud[i] - mu;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  PlaneModel plane;
  plane.n = eig.eigenvectors().col(0).normalized();  // eigenvalues ascending
  plane.d = -plane.n.dot(mu);
  return plane;
}

}  // namespace

RansacResult fit_plane_ransac(const PointCloud& cloud, const RansacConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("fit_plane_ransac: tau must be positive");
  if (cfg.max_iterations < 1) throw std::invalid_argument("fit_plane_ransac: max_iterations must be >= 1");
  const std::size_t n = cloud.size();
  if (n < 3) throw std::invalid_argument("fit_plane_ransac: fewer than 3 points");

  std::size_t min_consensus = 3;
  if (cfg.min_consensus > 0) {
    if (cfg.min_consensus < 3) throw std::invalid_argument("fit_plane_ransac: min_consensus must be >= 3");
    min_consensus = static_cast<std::size_t>(cfg.min_consensus);
  } else {
    min_consensus = std::max<std::size_t>(3, n / 2);
  }

  Rng rng(cfg.seed);
  PlaneModel best_plane;
  std::size_t best_count = 0;
  bool have_plane = false;

  int completed = 0;
  long long degenerate_skips = 0;
  const long long max_skips = 100LL * cfg.max_iterations;
  while (completed < cfg.max_iterations) {
    // Three distinct indices, sampled without replacement.
    const std::size_t i = rng.uniform_index(n);
    std::size_t j = rng.uniform_index(n - 1);
    if (j >= i) ++j;
    std::size_t k = rng.uniform_index(n - 2);
    if (k >= std::min(i, j)) ++k;
    if (k >= std::max(i, j)) ++k;

    PlaneModel hypothesis;
    try {
      hypothesis = plane_from_points(cloud[i], cloud[j], cloud[k]);
    } catch (const DegenerateError&) {
      if (++degenerate_skips > max_skips) {
        throw DegenerateError("fit_plane_ransac: no plane found (degenerate data)");
      }
      continue;  // does not consume a trial
    }
    ++completed;

    std::size_t count = 0;
    for (const Vec3& p : cloud) {
      if (point_plane_distance(p, hypothesis) <= cfg.tau) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_plane = hypothesis;
      have_plane = true;
      if (cfg.early_exit &&
          static_cast<double>(count) >= cfg.early_exit_fraction * static_cast<double>(n)) {
        break;
      }
    }
  }

  if (!have_plane || best_count < min_consensus) {
    throw DegenerateError("fit_plane_ransac: no plane found");
  }

  std::vector<std::size_t> consensus;
  consensus.reserve(best_count);
  for (std::size_t i = 0; i < n; ++i) {
    if (point_plane_distance(cloud[i], best_plane) <= cfg.tau) consensus.push_back(i);
  }

  RansacResult result;
  result.plane = fit_plane_lsq(cloud, consensus);
  result.inliers.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (point_plane_distance(cloud[i], result.plane) <= cfg.tau) {
      result.inliers[i] = true;
      ++result.inlier_count;
    }
  }
  return result;
}

PointCloud remove_background(const PointCloud& cloud, const PlaneModel& plane, double tau) {
  PointCloud out;
  for (const Vec3& p : cloud) {
    if (point_plane_distance(p, plane) > tau) out.push_back(p);
  }
  return out;
}

}  // namespace handpose
