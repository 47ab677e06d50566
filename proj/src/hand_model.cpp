#include "handpose/hand_model.hpp"

#include "handpose/errors.hpp"
#include "handpose/io.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace handpose {

namespace fs = std::filesystem;

namespace {

RigidTransform trans(const Vec3& t) { return {Mat3::Identity(), t}; }
RigidTransform rot(const Mat3& r) { return {r, Vec3::Zero()}; }

void check_shape(const Primitive& prim) {
  switch (prim.kind) {
    case PrimitiveKind::Sphere:
      if (!(prim.a > 0.0)) throw std::invalid_argument("sphere radius must be positive");
      break;
    case PrimitiveKind::Cylinder:
      if (!(prim.a > 0.0) || !(prim.b > 0.0)) {
        throw std::invalid_argument("cylinder radius and half length must be positive");
      }
      break;
    case PrimitiveKind::Ellipsoid:
      if (!(prim.a > 0.0) || !(prim.b > 0.0) || !(prim.c > 0.0)) {
        throw std::invalid_argument("ellipsoid semi-axes must be positive");
      }
      break;
  }
}

// Area scale factor of the unit-sphere parametrization of an ellipsoid.
double ellipsoid_measure(double a, double b, double c, const Vec3& u) {
  return Vec3(b * c * u.x(), a * c * u.y(), a * b * u.z()).norm();
}

double ellipsoid_area(double a, double b, double c) {
  // Composite Simpson over the sphere; the integrand is smooth so 256x256
  // panels are far beyond the accuracy needed here.
  constexpr int n_theta = 256, n_phi = 256;
  const double pi = std::numbers::pi;
  const double h_theta = pi / n_theta, h_phi = 2.0 * pi / n_phi;
  auto w_simpson = [](int i, int n) { return i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double sum = 0.0;
  for (int i = 0; i <= n_theta; ++i) {
    const double theta = i * h_theta;
    const double st = std::sin(theta), ct = std::cos(theta);
    double row = 0.0;
    for (int j = 0; j <= n_phi; ++j) {
      const double phi = j * h_phi;
      const Vec3 u(st * std::cos(phi), st * std::sin(phi), ct);
      row += w_simpson(j, n_phi) * ellipsoid_measure(a, b, c, u);
    }
    sum += w_simpson(i, n_theta) * row * st;
  }
  return sum * h_theta * h_phi / 9.0;
}

}  // namespace

double surface_area(const Primitive& prim) {
  check_shape(prim);
  switch (prim.kind) {
    case PrimitiveKind::Sphere:
      return 4.0 * std::numbers::pi * prim.a * prim.a;
    case PrimitiveKind::Cylinder:
      return 2.0 * std::numbers::pi * prim.a * (2.0 * prim.b);
    case PrimitiveKind::Ellipsoid:
      return ellipsoid_area(prim.a, prim.b, prim.c);
  }
  return 0.0;
}

SurfaceSample sample_primitive(const Primitive& prim, double density, Rng& rng) {
  if (!(density > 0.0)) throw std::invalid_argument("sample_primitive: density must be positive");
  check_shape(prim);

  const double expected = density * surface_area(prim);
  std::size_t count = static_cast<std::size_t>(std::floor(expected));
  if (rng.uniform01() < expected - std::floor(expected)) ++count;

  SurfaceSample out;
  out.points.points.reserve(count);
  out.normals.reserve(count);
  const double two_pi = 2.0 * std::numbers::pi;

  for (std::size_t i = 0; i < count; ++i) {
    Vec3 local, normal;
    switch (prim.kind) {
      case PrimitiveKind::Sphere: {
        const double z = 1.0 - 2.0 * rng.uniform01();
        const double phi = two_pi * rng.uniform01();
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        normal = Vec3(r * std::cos(phi), r * std::sin(phi), z);
        local = prim.a * normal;
        break;
      }
      case PrimitiveKind::Cylinder: {
        const double phi = two_pi * rng.uniform01();
        const double z = rng.uniform(-prim.b, prim.b);
        normal = Vec3(std::cos(phi), std::sin(phi), 0.0);
        local = Vec3(prim.a * normal.x(), prim.a * normal.y(), z);
        break;
      }
      case PrimitiveKind::Ellipsoid: {
        const double m_max = std::max({prim.b * prim.c, prim.a * prim.c, prim.a * prim.b});
        Vec3 u;
        while (true) {
          const double z = 1.0 - 2.0 * rng.uniform01();
          const double phi = two_pi * rng.uniform01();
          const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
          u = Vec3(r * std::cos(phi), r * std::sin(phi), z);
          if (rng.uniform01() * m_max <= ellipsoid_measure(prim.a, prim.b, prim.c, u)) break;
        }
        local = Vec3(prim.a * u.x(), prim.b * u.y(), prim.c * u.z());
        normal = Vec3(u.x() / prim.a, u.y() / prim.b, u.z() / prim.c).normalized();
        break;
      }
    }
    out.points.push_back(prim.pose.R * local + prim.pose.t);
    out.normals.push_back(prim.pose.R * normal);
  }
  return out;
}

std::vector<JointLimitViolation> validate_joint_limits(const JointAngles& angles) {
  std::vector<JointLimitViolation> violations;
  auto check = [&](const std::string& joint, double value, double lo, double hi) {
    if (value < lo || value > hi) violations.push_back({joint, value, lo, hi});
  };

  for (std::size_t f = 0; f < 4; ++f) {
    const std::string name = kFingerNames[f];
    const FingerJointAngles& a = angles.fingers[f];
    check(name + ".mcp_flexion", a.mcp_flexion, 0.0, 90.0);
    check(name + ".mcp_abduction", a.mcp_abduction, -15.0, 15.0);
    check(name + ".pip", a.pip, 0.0, 110.0);
    check(name + ".dip", a.dip, 0.0, 90.0);
  }

  // Provisional range for the thumb and palm angles.
  constexpr double lo = -15.0, hi = 90.0;
  check("thumb.base_yaw", angles.thumb.base_yaw, lo, hi);
  check("thumb.base_pitch", angles.thumb.base_pitch, lo, hi);
  check("thumb.tm_flexion", angles.thumb.tm_flexion, lo, hi);
  check("thumb.tm_abduction", angles.thumb.tm_abduction, lo, hi);
  check("thumb.mcp_flexion", angles.thumb.mcp_flexion, lo, hi);
  check("thumb.mcp_abduction", angles.thumb.mcp_abduction, lo, hi);
  check("thumb.ip", angles.thumb.ip, lo, hi);
  check("palm.roll", angles.palm[0], lo, hi);
  check("palm.pitch", angles.palm[1], lo, hi);
  check("palm.yaw", angles.palm[2], lo, hi);
  return violations;
}

HandSkeleton load_skeleton(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  JsonObject root(j, path);
  HandSkeleton skel;

  JsonObject palm(root.at("palm"), path + ": palm");
  skel.palm_half_axes = json_vec3(palm.at("half_axes"), path + ": palm.half_axes");
  palm.done();

  JsonObject fingers(root.at("fingers"), path + ": fingers");
  for (std::size_t f = 0; f < 4; ++f) {
    JsonObject fj(fingers.at(kFingerNames[f]), path + ": " + kFingerNames[f]);
    FingerSpec& spec = skel.fingers[f];
    spec.base = json_vec3(fj.at("base"), path);
    spec.base_yaw_deg = json_double(fj.at("base_yaw_deg"), path);
    const auto& lengths = fj.at("lengths");
    if (!lengths.is_array() || lengths.size() != 3) {
      throw ParseError(path + ": lengths must hold 3 numbers");
    }
    for (int i = 0; i < 3; ++i) spec.lengths[i] = json_double(lengths[i], path);
    spec.radius = json_double(fj.at("radius"), path);
    fj.done();
  }
  fingers.done();

  JsonObject tj(root.at("thumb"), path + ": thumb");
  skel.thumb.base = json_vec3(tj.at("base"), path);
  skel.thumb.base_yaw_deg = json_double(tj.at("base_yaw_deg"), path);
  skel.thumb.base_pitch_deg = json_double(tj.at("base_pitch_deg"), path);
  const auto& tlengths = tj.at("lengths");
  if (!tlengths.is_array() || tlengths.size() != 3) {
    throw ParseError(path + ": thumb lengths must hold 3 numbers");
  }
  for (int i = 0; i < 3; ++i) skel.thumb.lengths[i] = json_double(tlengths[i], path);
  skel.thumb.radius = json_double(tj.at("radius"), path);
  tj.done();
  root.done();

  for (const FingerSpec& f : skel.fingers) {
    for (double l : f.lengths) {
      if (!(l > 0.0)) throw ParseError(path + ": phalanx lengths must be positive");
    }
    if (!(f.radius > 0.0)) throw ParseError(path + ": finger radius must be positive");
  }
  return skel;
}

std::vector<PosedPrimitive> forward_kinematics(const HandSkeleton& skeleton,
                                               const JointAngles& angles) {
  const auto violations = validate_joint_limits(angles);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "joint limits violated:";
    for (const auto& v : violations) {
      msg << ' ' << v.joint << '=' << v.value << " outside [" << v.lo << ", " << v.hi << ']';
    }
    throw std::invalid_argument(msg.str());
  }

  const RigidTransform root(
      rotation_rpy(Vec3(deg_to_rad(angles.palm[0]), deg_to_rad(angles.palm[1]),
                        deg_to_rad(angles.palm[2]))),
      Vec3::Zero());

  std::vector<PosedPrimitive> out;
  Primitive palm;
  palm.kind = PrimitiveKind::Ellipsoid;
  palm.a = skeleton.palm_half_axes.x();
  palm.b = skeleton.palm_half_axes.y();
  palm.c = skeleton.palm_half_axes.z();
  palm.pose = root;
  out.push_back({"palm", palm});

  const Mat3 axis_to_x = rotation_y(deg_to_rad(90.0));  // cylinder z axis onto +x

  auto add_segment = [&](const std::string& part, const RigidTransform& joint, double length,
                         double radius) {
    Primitive seg;
    seg.kind = PrimitiveKind::Cylinder;
    seg.a = radius;
    seg.b = length / 2.0;
    seg.pose = compose(joint, compose(trans(Vec3(length / 2.0, 0, 0)), rot(axis_to_x)));
    out.push_back({part, seg});
  };
  auto add_tip = [&](const std::string& part, const RigidTransform& joint, double length,
                     double radius) {
    Primitive tip;
    tip.kind = PrimitiveKind::Sphere;
    tip.a = radius;
    tip.pose = compose(joint, trans(Vec3(length, 0, 0)));
    out.push_back({part, tip});
  };

  for (std::size_t f = 0; f < 4; ++f) {
    const FingerSpec& spec = skeleton.fingers[f];
    const FingerJointAngles& a = angles.fingers[f];
    const std::string name = kFingerNames[f];

    RigidTransform t = compose(root, trans(spec.base));
    t = compose(t, rot(rotation_z(deg_to_rad(spec.base_yaw_deg + a.mcp_abduction))));
    t = compose(t, rot(rotation_y(deg_to_rad(a.mcp_flexion))));
    add_segment(name + ".proximal", t, spec.lengths[0], spec.radius);

    t = compose(t, trans(Vec3(spec.lengths[0], 0, 0)));
    t = compose(t, rot(rotation_y(deg_to_rad(a.pip))));
    add_segment(name + ".middle", t, spec.lengths[1], spec.radius);

    t = compose(t, trans(Vec3(spec.lengths[1], 0, 0)));
    t = compose(t, rot(rotation_y(deg_to_rad(a.dip))));
    add_segment(name + ".distal", t, spec.lengths[2], spec.radius);
    add_tip(name + ".tip", t, spec.lengths[2], spec.radius);
  }

  const ThumbSpec& ts = skeleton.thumb;
  const ThumbJointAngles& ta = angles.thumb;
  RigidTransform t = compose(root, trans(ts.base));
  t = compose(t, rot(rotation_z(deg_to_rad(ts.base_yaw_deg + ta.base_yaw))));
  t = compose(t, rot(rotation_y(deg_to_rad(ts.base_pitch_deg + ta.base_pitch))));
  t = compose(t, rot(rotation_z(deg_to_rad(ta.tm_abduction))));
  t = compose(t, rot(rotation_y(deg_to_rad(ta.tm_flexion))));
  add_segment("thumb.metacarpal", t, ts.lengths[0], ts.radius);

  t = compose(t, trans(Vec3(ts.lengths[0], 0, 0)));
  t = compose(t, rot(rotation_z(deg_to_rad(ta.mcp_abduction))));
  t = compose(t, rot(rotation_y(deg_to_rad(ta.mcp_flexion))));
  add_segment("thumb.proximal", t, ts.lengths[1], ts.radius);

  t = compose(t, trans(Vec3(ts.lengths[1], 0, 0)));
  t = compose(t, rot(rotation_y(deg_to_rad(ta.ip))));
  add_segment("thumb.distal", t, ts.lengths[2], ts.radius);
  add_tip("thumb.tip", t, ts.lengths[2], ts.radius);

  return out;
}

std::vector<std::size_t> visible_indices(const SurfaceSample& sample, const Vec3& viewpoint,
                                         double cell, double depth_tol) {
  if (sample.points.size() != sample.normals.size()) {
    throw std::invalid_argument("visible_indices: points/normals size mismatch");
  }
  if (!(cell > 0.0) || depth_tol < 0.0) {
    throw std::invalid_argument("visible_indices: invalid grid parameters");
  }

  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < sample.points.size(); ++i) {
    if (sample.normals[i].dot(viewpoint - sample.points[i]) > 0.0) front.push_back(i);
  }
  if (front.empty()) return front;

  Vec3 center = Vec3::Zero();
  for (std::size_t i : front) center += sample.points[i];
  center /= static_cast<double>(front.size());
  Vec3 w = center - viewpoint;
  const double dist = w.norm();
  if (dist < 1e-9) return front;  // viewpoint inside the cloud, nothing to occlude against
  w /= dist;
  const Vec3 ref = std::abs(w.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = w.cross(ref).normalized();
  const Vec3 v = w.cross(u);

  auto cell_key = [&](const Vec3& p, double& depth) -> std::optional<std::uint64_t> {
    const Vec3 rel = p - viewpoint;
    depth = rel.dot(w);
    if (depth <= 1e-9) return std::nullopt;  // behind the viewpoint
    const double s = dist / depth;  // perspective scale onto the plane through `center`
    const auto iu = static_cast<std::int64_t>(std::floor(rel.dot(u) * s / cell));
    const auto iv = static_cast<std::int64_t>(std::floor(rel.dot(v) * s / cell));
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(iu)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(iv));
  };

  std::unordered_map<std::uint64_t, double> min_depth;
  min_depth.reserve(front.size());
  for (std::size_t i : front) {
    double depth = 0.0;
    const auto key = cell_key(sample.points[i], depth);
    if (!key) continue;
    auto [it, inserted] = min_depth.try_emplace(*key, depth);
    if (!inserted && depth < it->second) it->second = depth;
  }

  std::vector<std::size_t> visible;
  visible.reserve(front.size());
  for (std::size_t i : front) {
    double depth = 0.0;
    const auto key = cell_key(sample.points[i], depth);
    if (!key) continue;
    if (depth <= min_depth[*key] + depth_tol) visible.push_back(i);
  }
  return visible;
}

namespace {

PointCloud cull_and_collect(const SurfaceSample& sample, const Vec3& viewpoint) {
  PointCloud out;
  for (std::size_t i : visible_indices(sample, viewpoint)) out.push_back(sample.points[i]);
  return out;
}

void append_sample(SurfaceSample& all, SurfaceSample&& part) {
  all.points.points.insert(all.points.points.end(), part.points.begin(), part.points.end());
  all.normals.insert(all.normals.end(), part.normals.begin(), part.normals.end());
}

}  // namespace

PointCloud generate_model(const HandSkeleton& skeleton, const JointAngles& angles,
                          const Vec3& viewpoint, double density, std::uint64_t seed) {
  const auto prims = forward_kinematics(skeleton, angles);
  Rng rng(seed);
  SurfaceSample all;
  for (const PosedPrimitive& pp : prims) append_sample(all, sample_primitive(pp.prim, density, rng));
  return cull_and_collect(all, viewpoint);
}

namespace {

JointAngles parse_angles(const nlohmann::json& j, const std::string& ctx) {
  JsonObject obj(j, ctx);
  JointAngles angles;

  auto fill = [&](const nlohmann::json& arr, double* dst, std::size_t n, const std::string& key) {
    if (!arr.is_array() || arr.size() != n) {
      throw ParseError(ctx + ": '" + key + "' must hold " + std::to_string(n) + " angles");
    }
    for (std::size_t i = 0; i < n; ++i) dst[i] = json_double(arr[i], ctx);
  };

  fill(obj.at("palm"), angles.palm.data(), 3, "palm");
  double thumb[7];
  fill(obj.at("thumb"), thumb, 7, "thumb");
  angles.thumb = {thumb[0], thumb[1], thumb[2], thumb[3], thumb[4], thumb[5], thumb[6]};
  for (std::size_t f = 0; f < 4; ++f) {
    double a[4];
    fill(obj.at(kFingerNames[f]), a, 4, kFingerNames[f]);
    angles.fingers[f] = {a[0], a[1], a[2], a[3]};
  }
  obj.done();
  return angles;
}

Primitive parse_primitive(const nlohmann::json& j, const std::string& ctx) {
  JsonObject obj(j, ctx);
  Primitive prim;
  const std::string kind = json_string(obj.at("kind"), ctx + ": kind");
  if (kind == "sphere") {
    prim.kind = PrimitiveKind::Sphere;
    prim.a = json_double(obj.at("radius"), ctx);
  } else if (kind == "cylinder") {
    prim.kind = PrimitiveKind::Cylinder;
    prim.a = json_double(obj.at("radius"), ctx);
    prim.b = json_double(obj.at("height"), ctx) / 2.0;
  } else if (kind == "ellipsoid") {
    const Vec3 axes = json_vec3(obj.at("half_axes"), ctx);
    prim.kind = PrimitiveKind::Ellipsoid;
    prim.a = axes.x();
    prim.b = axes.y();
    prim.c = axes.z();
  } else {
    throw ParseError(ctx + ": unknown primitive kind '" + kind + "'");
  }
  obj.done();
  check_shape(prim);
  return prim;
}

}  // namespace

ModelSpec read_model_spec(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  JsonObject root(j, path);
  ModelSpec spec;
  const std::string type = json_string(root.at("type"), path + ": type");
  if (type == "hand") {
    spec.type = ModelSpec::Type::Hand;
    spec.angles = parse_angles(root.at("angles"), path + ": angles");
  } else if (type == "object") {
    spec.type = ModelSpec::Type::Object;
    spec.object = parse_primitive(root.at("primitive"), path + ": primitive");
  } else if (type == "interaction") {
    spec.type = ModelSpec::Type::Interaction;
    spec.angles = parse_angles(root.at("angles"), path + ": angles");
    JsonObject obj(root.at("object"), path + ": object");
    spec.object = parse_primitive(obj.at("primitive"), path + ": object.primitive");
    Vec3 translation = Vec3::Zero(), rpy = Vec3::Zero();
    if (const auto* t = obj.maybe("translation")) translation = json_vec3(*t, path);
    if (const auto* r = obj.maybe("rotation_rpy_deg")) rpy = json_vec3(*r, path);
    spec.object.pose = RigidTransform(
        rotation_rpy(Vec3(deg_to_rad(rpy.x()), deg_to_rad(rpy.y()), deg_to_rad(rpy.z()))),
        translation);
    obj.done();
  } else {
    throw ParseError(path + ": unknown model type '" + type + "'");
  }
  root.done();
  return spec;
}

JointAngles read_pose_angles(const std::string& path) {
  const ModelSpec spec = read_model_spec(path);
  if (spec.type == ModelSpec::Type::Object) {
    throw ParseError(path + ": expected a hand pose, got an object spec");
  }
  return spec.angles;
}

PointCloud generate_from_spec(const ModelSpec& spec, const HandSkeleton& skeleton,
                              const Vec3& viewpoint, double density, std::uint64_t seed) {
  if (!(density > 0.0)) throw std::invalid_argument("generate_from_spec: density must be positive");
  Rng rng(seed);
  SurfaceSample all;
  if (spec.type == ModelSpec::Type::Hand || spec.type == ModelSpec::Type::Interaction) {
    for (const PosedPrimitive& pp : forward_kinematics(skeleton, spec.angles)) {
      append_sample(all, sample_primitive(pp.prim, density, rng));
    }
  }
  if (spec.type == ModelSpec::Type::Object || spec.type == ModelSpec::Type::Interaction) {
    append_sample(all, sample_primitive(spec.object, density, rng));
  }
  return cull_and_collect(all, viewpoint);
}

std::pair<PointCloud, SceneTruth> generate_scene(const SceneSpec& spec) {
  if (spec.noise_sigma < 0.0) throw std::invalid_argument("generate_scene: noise_sigma must be nonnegative");
  if (!(spec.extent_u > 0.0) || !(spec.extent_v > 0.0)) {
    throw std::invalid_argument("generate_scene: plane extent must be positive");
  }
  if (!(spec.plane_density > 0.0)) {
    throw std::invalid_argument("generate_scene: plane density must be positive");
  }
  if (std::abs(spec.plane.n.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("generate_scene: plane normal must be unit length");
  }
  if (point_plane_distance(spec.plane_center, spec.plane) > 1e-9) {
    throw std::invalid_argument("generate_scene: plane_center must lie on the plane");
  }

  Rng rng(spec.seed);
  PointCloud cloud;
  SceneTruth truth;
  truth.source_names.push_back("plane");

  const Vec3 ref = std::abs(spec.plane.n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = spec.plane.n.cross(ref).normalized();
  const Vec3 v = spec.plane.n.cross(u);

  const double expected = spec.plane_density * spec.extent_u * spec.extent_v;
  std::size_t n_plane = static_cast<std::size_t>(std::floor(expected));
  if (rng.uniform01() < expected - std::floor(expected)) ++n_plane;
  for (std::size_t i = 0; i < n_plane; ++i) {
    const double du = rng.uniform(-spec.extent_u / 2.0, spec.extent_u / 2.0);
    const double dv = rng.uniform(-spec.extent_v / 2.0, spec.extent_v / 2.0);
    cloud.push_back(spec.plane_center + du * u + dv * v);
    truth.labels.push_back(0);
  }

  int source = 1;
  for (const ScenePlacedModel& m : spec.models) {
    truth.source_names.push_back(m.name);
    truth.model_poses.emplace_back(m.name, m.pose);
    for (const Vec3& p : m.cloud) {
      cloud.push_back(m.pose(p));
      truth.labels.push_back(source);
    }
    ++source;
  }

  if (spec.noise_sigma > 0.0) {
    for (Vec3& p : cloud) p += rng.gaussian_vec3(spec.noise_sigma);
  }
  return {std::move(cloud), std::move(truth)};
}

SceneSpec read_scene_spec(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  JsonObject root(j, path);
  SceneSpec spec;
  spec.seed = json_u64(root.at("seed"), path + ": seed");
  spec.noise_sigma = json_double(root.at("noise_sigma"), path + ": noise_sigma");
  spec.viewpoint = json_vec3(root.at("viewpoint"), path + ": viewpoint");

  JsonObject plane(root.at("plane"), path + ": plane");
  spec.plane.n = json_vec3(plane.at("normal"), path + ": plane.normal");
  spec.plane.d = json_double(plane.at("d"), path + ": plane.d");
  spec.plane_center = json_vec3(plane.at("center"), path + ": plane.center");
  const auto& extent = plane.at("extent");
  if (!extent.is_array() || extent.size() != 2) {
    throw ParseError(path + ": plane.extent must hold 2 numbers");
  }
  spec.extent_u = json_double(extent[0], path);
  spec.extent_v = json_double(extent[1], path);
  spec.plane_density = json_double(plane.at("density"), path + ": plane.density");
  plane.done();

  const auto& models = root.at("models");
  if (!models.is_array()) throw ParseError(path + ": 'models' must be an array");
  const fs::path base = fs::path(path).parent_path();
  for (const auto& mj : models) {
    JsonObject m(mj, path + ": model entry");
    ScenePlacedModel placed;
    placed.name = json_string(m.at("name"), path + ": model name");
    const std::string cloud_path = (base / json_string(m.at("cloud"), path)).string();
    placed.cloud = read_cloud(cloud_path);
    Vec3 translation = Vec3::Zero(), rpy = Vec3::Zero();
    if (const auto* t = m.maybe("translation")) translation = json_vec3(*t, path);
    if (const auto* r = m.maybe("rotation_rpy_deg")) rpy = json_vec3(*r, path);
    placed.pose = RigidTransform(
        rotation_rpy(Vec3(deg_to_rad(rpy.x()), deg_to_rad(rpy.y()), deg_to_rad(rpy.z()))),
        translation);
    m.done();
    spec.models.push_back(std::move(placed));
  }
  root.done();
  return spec;
}

void write_scene_truth(const SceneTruth& truth, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "{\n  \"sources\": [";
  for (std::size_t i = 0; i < truth.source_names.size(); ++i) {
    out << (i ? ", " : "") << '"' << truth.source_names[i] << '"';
  }
  out << "],\n  \"models\": [";
  for (std::size_t i = 0; i < truth.model_poses.size(); ++i) {
    const auto& [name, pose] = truth.model_poses[i];
    out << (i ? ",\n    " : "\n    ") << "{\"name\": \"" << name << "\", \"r\": [";
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        out << (r + c ? ", " : "") << format_double(pose.R(r, c));
      }
    }
    out << "], \"t\": [" << format_double(pose.t.x()) << ", " << format_double(pose.t.y()) << ", "
        << format_double(pose.t.z()) << "]}";
  }
  out << (truth.model_poses.empty() ? "" : "\n  ") << "],\n  \"labels\": [";
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    out << (i ? "," : "") << truth.labels[i];
  }
  out << "]\n}\n";
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace handpose
