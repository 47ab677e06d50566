#include "handpose/geometry.hpp"

#include "handpose/kdtree.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace handpose {

bool is_rotation_matrix(const Mat3& R, double tol) {
  const Mat3 gram = R.transpose() * R;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(R.determinant() - 1.0) <= tol;
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : R(rotation), t(translation) {
  if (!is_rotation_matrix(rotation)) {
    throw std::invalid_argument("RigidTransform: matrix is not a rotation (orthonormal, det +1)");
  }
}

Vec3 centroid(const PointCloud& cloud) {
  if (cloud.empty()) throw std::invalid_argument("centroid: empty cloud");
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : cloud) sum += p;
  return sum / static_cast<double>(cloud.size());
}

std::pair<PointCloud, Vec3> demean(const PointCloud& cloud) {
  const Vec3 mu = centroid(cloud);
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud) out.push_back(p - mu);
  return {std::move(out), mu};
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& T) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud) out.push_back(T.R * p + T.t);
  return out;
}

RigidTransform compose(const RigidTransform& second, const RigidTransform& first) {
  return {second.R * first.R, second.R * first.t + second.t};
}

RigidTransform inverse(const RigidTransform& T) {
  const Mat3 Rt = T.R.transpose();
  return {Rt, -(Rt * T.t)};
}

Mat3 rotation_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 m;
  m << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return m;
}

Mat3 rotation_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 m;
  m << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return m;
}

Mat3 rotation_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 m;
  m << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return m;
}

Mat3 rotation_rpy(const Vec3& rpy) {
  return rotation_z(rpy.z()) * rotation_y(rpy.y()) * rotation_x(rpy.x());
}

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

double rms_nearest(const PointCloud& model, const PointCloud& data) {
  if (model.empty() || data.empty()) {
    throw std::invalid_argument("rms_nearest: empty cloud");
  }
  NNIndex index(data);
  return rms_nearest(model, index);
}

double rms_nearest_symmetric(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("rms_nearest_symmetric: empty cloud");
  }
  NNIndex ia(a), ib(b);
  double sum = 0.0;
  for (const Vec3& p : a) {
    const auto hit = ib.nearest(p);
    sum += hit.distance * hit.distance;
  }
  for (const Vec3& p : b) {
    const auto hit = ia.nearest(p);
    sum += hit.distance * hit.distance;
  }
  return std::sqrt(sum / static_cast<double>(a.size() + b.size()));
}

}  // namespace handpose
