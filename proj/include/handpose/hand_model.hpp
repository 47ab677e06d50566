#pragma once

#include "handpose/geometry.hpp"
#include "handpose/plane.hpp"
#include "handpose/random.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace handpose {

enum class PrimitiveKind { Cylinder, Sphere, Ellipsoid };

/// Surface primitive in its local frame, placed by `pose`.
///   sphere:    a = radius
///   cylinder:  a = radius, b = half length, axis along local z (lateral
///              surface only, no caps)
///   ellipsoid: a, b, c = semi-axes
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Sphere;
  double a = 0.0, b = 0.0, c = 0.0;
  RigidTransform pose;
};

double surface_area(const Primitive& prim);

struct SurfaceSample {
  PointCloud points;
  std::vector<Vec3> normals;  // unit outward normals, used for culling
};

/// Uniform surface sampling; the sample count is density * area up to the
/// fractional remainder.
SurfaceSample sample_primitive(const Primitive& prim, double density, Rng& rng);

// Joint angles in degrees. Non-thumb fingers carry flexion/abduction at the
// MCP plus PIP and DIP flexion; the thumb carries 7 values (base yaw/pitch,
// TM flexion/abduction, MCP flexion/abduction, IP flexion); 3 palm
// orientation angles complete the 26.
struct FingerJointAngles {
  double mcp_flexion = 0.0;
  double mcp_abduction = 0.0;
  double pip = 0.0;
  double dip = 0.0;
};

struct ThumbJointAngles {
  double base_yaw = 0.0;
  double base_pitch = 0.0;
  double tm_flexion = 0.0;
  double tm_abduction = 0.0;
  double mcp_flexion = 0.0;
  double mcp_abduction = 0.0;
  double ip = 0.0;
};

struct JointAngles {
  std::array<double, 3> palm{};              // roll, pitch, yaw
  ThumbJointAngles thumb;
  std::array<FingerJointAngles, 4> fingers;  // index, middle, ring, pinky
};

constexpr std::array<const char*, 4> kFingerNames{"index", "middle", "ring", "pinky"};

struct JointLimitViolation {
  std::string joint;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Closed-interval limit check. Finger joints follow the anatomical static
/// constraints (MCP flexion 0..90, PIP 0..110, DIP 0..90, MCP abduction
/// -15..15); thumb and palm angles use the provisional -15..90 range.
std::vector<JointLimitViolation> validate_joint_limits(const JointAngles& angles);

struct FingerSpec {
  Vec3 base = Vec3::Zero();   // MCP position in the palm frame
  double base_yaw_deg = 0.0;  // resting splay about palm normal
  std::array<double, 3> lengths{};  // proximal, middle, distal phalanx, meters
  double radius = 0.008;
};

struct ThumbSpec {
  Vec3 base = Vec3::Zero();
  double base_yaw_deg = 0.0;
  double base_pitch_deg = 0.0;
  std::array<double, 3> lengths{};  // metacarpal, proximal, distal
  double radius = 0.009;
};

/// Kinematic tree: palm ellipsoid at the root, four finger chains and a thumb
/// chain. All dimensions come from a config file, not code.
struct HandSkeleton {
  Vec3 palm_half_axes = Vec3(0.045, 0.040, 0.015);
  std::array<FingerSpec, 4> fingers;
  ThumbSpec thumb;
};

HandSkeleton load_skeleton(const std::string& path);

struct PosedPrimitive {
  std::string part;
  Primitive prim;  // pose expressed in the hand root frame
};

/// Chained rigid transforms from the palm root to the fingertips. Fingers
/// extend along +x in the rest pose, flexion folds toward -z, abduction
/// spreads in the palm plane. Throws listing the violations when the angles
/// break the joint limits.
std::vector<PosedPrimitive> forward_kinematics(const HandSkeleton& skeleton,
                                               const JointAngles& angles);

/// Indices of sample points visible from `viewpoint`: back-face culling by
/// the analytic normals, then a depth-buffer pass on a grid in the view plane
/// to approximate self-occlusion.
std::vector<std::size_t> visible_indices(const SurfaceSample& sample, const Vec3& viewpoint,
                                         double cell = 0.002, double depth_tol = 0.004);

/// Sampled, posed, visibility-culled hand surface in the canonical frame
/// (palm center at the origin).
PointCloud generate_model(const HandSkeleton& skeleton, const JointAngles& angles,
                          const Vec3& viewpoint, double density, std::uint64_t seed);

/// Parsed model spec file: a bare hand pose, an object primitive, or a
/// hand-plus-object interaction.
struct ModelSpec {
  enum class Type { Hand, Object, Interaction } type = Type::Hand;
  JointAngles angles;      // Hand, Interaction
  Primitive object;        // Object, Interaction (pose = placement in the hand frame)
};

ModelSpec read_model_spec(const std::string& path);

PointCloud generate_from_spec(const ModelSpec& spec, const HandSkeleton& skeleton,
                              const Vec3& viewpoint, double density, std::uint64_t seed);

/// Scene description: a bounded background plane patch plus placed prototype
/// clouds, with isotropic Gaussian noise. Stands in for a depth sensor so the
/// whole pipeline can run offline.
struct ScenePlacedModel {
  std::string name;
  PointCloud cloud;       // prototype in its canonical frame
  RigidTransform pose;    // true placement
};

struct SceneSpec {
  PlaneModel plane;
  Vec3 plane_center = Vec3::Zero();  // must lie on the plane
  double extent_u = 1.0, extent_v = 1.0;  // full widths of the plane patch
  double plane_density = 10000.0;         // points per m^2
  std::vector<ScenePlacedModel> models;
  double noise_sigma = 0.0;
  Vec3 viewpoint = Vec3::Zero();
  std::uint64_t seed = 0;
};

struct SceneTruth {
  /// 0 = plane, i >= 1 = models[i-1].
  std::vector<int> labels;
  std::vector<std::string> source_names;  // "plane" first, then model names
  std::vector<std::pair<std::string, RigidTransform>> model_poses;
};

std::pair<PointCloud, SceneTruth> generate_scene(const SceneSpec& spec);

SceneSpec read_scene_spec(const std::string& path);
void write_scene_truth(const SceneTruth& truth, const std::string& path);

/// Hand pose angles from a pose file ("type": "hand"); convenience for tests.
JointAngles read_pose_angles(const std::string& path);

}  // namespace handpose
