#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

namespace handpose {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Ordered set of 3-D points, in meters. Order is stable and meaningful:
/// cluster labelings and correspondence sets index into it.
struct PointCloud {
  std::vector<Vec3> points;

  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)) {}
  PointCloud(std::initializer_list<Vec3> pts) : points(pts) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Vec3& operator[](std::size_t i) { return points[i]; }
  const Vec3& operator[](std::size_t i) const { return points[i]; }
  void push_back(const Vec3& p) { points.push_back(p); }

  auto begin() { return points.begin(); }
  auto end() { return points.end(); }
  auto begin() const { return points.begin(); }
  auto end() const { return points.end(); }
};

bool is_rotation_matrix(const Mat3& R, double tol = 1e-9);

/// Rotation plus translation. The rotation is validated at construction
/// (orthonormal, det +1 within 1e-9); off-tolerance matrices are rejected,
/// never silently re-orthonormalized.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  RigidTransform() = default;
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  Vec3 operator()(const Vec3& p) const { return R * p + t; }
  static RigidTransform identity() { return {}; }
};

Vec3 centroid(const PointCloud& cloud);

/// Returns the cloud shifted to zero mean plus the original centroid.
std::pair<PointCloud, Vec3> demean(const PointCloud& cloud);

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& T);

/// compose(second, first): apply `first`, then `second`.
RigidTransform compose(const RigidTransform& second, const RigidTransform& first);
RigidTransform inverse(const RigidTransform& T);

Mat3 rotation_x(double rad);
Mat3 rotation_y(double rad);
Mat3 rotation_z(double rad);

/// Rz(yaw) * Ry(pitch) * Rx(roll), angles in radians, rpy = (roll, pitch, yaw).
Mat3 rotation_rpy(const Vec3& rpy);

double deg_to_rad(double deg);

/// RMS of nearest-point distances from `model` into `data` (directional; the
/// data side may carry extra points that never enter the sum).
double rms_nearest(const PointCloud& model, const PointCloud& data);

/// Symmetric variant: pools squared nearest distances from both directions.
double rms_nearest_symmetric(const PointCloud& a, const PointCloud& b);

}  // namespace handpose
