#pragma once

#include "handpose/geometry.hpp"

#include <cstdint>
#include <vector>

namespace handpose {

/// Plane {p : n.p + d = 0} with unit normal. Distances are absolute, so the
/// sign convention of n is irrelevant downstream.
struct PlaneModel {
  Vec3 n = Vec3::UnitZ();
  double d = 0.0;
};

/// Plane through three non-collinear points.
PlaneModel plane_from_points(const Vec3& a, const Vec3& b, const Vec3& c);

double point_plane_distance(const Vec3& p, const PlaneModel& plane);

struct RansacConfig {
  double tau = 0.1;           // inlier distance threshold, meters
  int max_iterations = 1000;  // fixed trial count; no adaptive early exit by default
  long long min_consensus = -1;  // <= 0: half the cloud (at least 3)
  std::uint64_t seed = 0;
  bool early_exit = false;       // optional: stop once a consensus covers early_exit_fraction
  double early_exit_fraction = 0.9;
};

struct RansacResult {
  PlaneModel plane;            // least-squares refit of the winning consensus set
  std::vector<bool> inliers;   // mask against the refined plane: dist <= tau
  std::size_t inlier_count = 0;
};

/// Hypothesize-and-verify plane fit: minimal 3-point samples, consensus within
/// tau, largest consensus after max_iterations wins and is refit by total
/// least squares. Degenerate samples are skipped without consuming a trial.
RansacResult fit_plane_ransac(const PointCloud& cloud, const RansacConfig& cfg);

/// Points farther than tau from the plane, original order preserved.
PointCloud remove_background(const PointCloud& cloud, const PlaneModel& plane, double tau);

}  // namespace handpose
