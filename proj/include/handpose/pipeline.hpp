#pragma once

#include "handpose/clustering.hpp"
#include "handpose/geometry.hpp"
#include "handpose/io.hpp"
#include "handpose/plane.hpp"
#include "handpose/registration.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace handpose {

/// Inverse-RMSE normalization: p_i = (1/rmse_i) / sum(1/rmse_j). Values are
/// floored at 1e-9 m before inversion so an exact-zero match dominates
/// without producing infinities.
std::vector<double> probabilities(const std::vector<double>& rmse);

enum class Strategy { Static, Grasping };
enum class Phase { Static, Detection, Separate, Merged };

const char* to_string(Phase p);

/// Library prototype plus its tracked placement. The current cloud always
/// equals the cumulative pose applied to the canonical cloud.
struct ModelState {
  std::string name;
  ModelCategory category = ModelCategory::Gesture;
  PointCloud canonical;
  PointCloud current;
  RigidTransform pose;
};

std::vector<ModelState> make_states(const ModelLibrary& library);

struct FrameResult {
  int frame = 0;
  Phase phase = Phase::Static;
  std::vector<std::string> model_names;  // library order
  std::vector<double> rmse;              // meters, parallel to model_names
  std::vector<double> probability;       // parallel, sums to 1
  std::string selected;                  // argmin rmse = argmax probability
  RigidTransform best;                   // transform applied to the selected model this frame
  std::string detected_object;           // grasping only, set from the detection frame on
  int object_cluster = -1;               // grasping separate/detection frames
};

struct ClusteringParams {
  enum class Algo { Dbscan, Ece, Kmeans } algo = Algo::Dbscan;
  double eps = 0.02;
  int min_pts = 10;
  double radius = 0.02;
  int min_size = 1;
  int k = 2;
  int max_iters = 100;
};

struct PipelineConfig {
  Strategy strategy = Strategy::Static;
  std::string manifest_path;
  RansacConfig ransac;
  ClusteringParams clustering;
  IcpConfig icp;
  StochasticIcpConfig stochastic;
  std::uint64_t seed = 0;
};

PipelineConfig read_pipeline_config(const std::string& path);

/// First index at which the cluster count drops to 1 (-1 if it never does).
/// The grasping strategy requires two separate clusters at the start.
int detect_merge(const std::vector<int>& cluster_counts);

/// Frame-sequence orchestration. Frames depend on the previous frame's model
/// states, so they are processed strictly in order; parallelism lives inside
/// the stochastic registration trials.
class Pipeline {
 public:
  Pipeline(ModelLibrary library, PipelineConfig cfg);

  /// Full per-frame chain: plane removal, clustering, matching, state update.
  FrameResult process_frame(const PointCloud& raw_frame, int frame_index);

  /// Matching entry points after segmentation.
  FrameResult match_static(const PointCloud& frame_cloud, int frame_index);
  FrameResult match_grasp(const std::vector<PointCloud>& clusters, int frame_index);

  const std::vector<ModelState>& states() const { return states_; }
  bool first_frame_pending() const { return first_; }
  Phase phase() const { return phase_; }

 private:
  std::vector<ModelState> states_;
  PipelineConfig cfg_;
  bool first_ = true;
  Phase phase_;
  bool merged_ = false;
  std::string detected_object_;
  Vec3 prev_object_centroid_ = Vec3::Zero();
  Vec3 prev_hand_centroid_ = Vec3::Zero();

  StochasticIcpConfig stochastic_for(std::uint64_t seed) const;

  /// Applies the per-state transforms, selects the winner, and assembles the
  /// frame result. All validation happens before this point so a throwing
  /// frame leaves the states untouched.
  FrameResult commit_frame(int frame_index, Phase phase, const std::vector<double>& rmse,
                           const std::vector<RigidTransform>& applied);
};

struct SequenceResult {
  std::vector<FrameResult> frames;  // successful frames only
  /// Cumulative pose of every model after each successful frame, in library
  /// order, parallel to `frames`.
  std::vector<std::vector<RigidTransform>> poses;
  std::vector<std::string> model_names;
  std::vector<std::string> errors;  // one entry per skipped frame
};

/// Reads each frame file, removes the background plane, clusters, and runs
/// the strategy's matcher. Failing frames are recorded and skipped with the
/// states unchanged. Deterministic for a fixed config seed.
SequenceResult run_sequence(const std::vector<std::string>& frame_files,
                            const PipelineConfig& cfg);

/// CSV: frame,model,rmse_mm,probability,selected,r00..r22,tx,ty,tz with one
/// row per (frame, model). RMSE is reported in millimeters.
void write_frame_metrics(const std::vector<FrameResult>& results, const std::string& path);

void write_pose_log(const SequenceResult& result, const std::string& path);

}  // namespace handpose
