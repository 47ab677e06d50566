#pragma once

#include "handpose/geometry.hpp"
#include "handpose/kdtree.hpp"
#include "handpose/random.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace handpose {

/// One entry per model point: (model index, index of its nearest data point).
/// Model indices appear exactly once; data indices may repeat.
struct CorrespondenceSet {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

CorrespondenceSet find_correspondences(const PointCloud& model, const NNIndex& data_index);

struct AlignmentResult {
  RigidTransform transform;
  double residual_error = 0.0;  // sum of squared pair distances at the optimum, m^2
  Vec3 singular_values = Vec3::Zero();  // of the cross-covariance, descending
};

/// Closed-form least-squares rigid alignment over fixed correspondences:
/// centroids and deviations restricted to matched pairs, SVD of the
/// cross-covariance, reflection corrected so det(R) = +1.
AlignmentResult svd_align(const PointCloud& model, const PointCloud& data,
                          const CorrespondenceSet& corr);

/// Full clouds shifted by the matched-pair centroids (data side weighted by
/// match multiplicity), as consumed by the closed-form error identity.
struct PairedDeviations {
  PointCloud model_dev;
  PointCloud data_dev;
  Vec3 model_centroid;
  Vec3 data_centroid;
};

PairedDeviations demean_paired(const PointCloud& model, const PointCloud& data,
                               const CorrespondenceSet& corr);

/// Minimal alignment error from the singular values alone:
/// sum(|p'|^2 + |m'|^2) - 2(s1 + s2 +/- s3), the sign of the last term
/// following the reflection correction.
double closed_form_error(const PointCloud& model_dev, const PointCloud& data_dev,
                         const CorrespondenceSet& corr, const Vec3& singular_values);

struct IcpConfig {
  int max_iter = 30;
  double err = 1e-5;  // relative change of mean squared correspondence error
};

struct IcpResult {
  PointCloud aligned;
  RigidTransform transform;  // maps the input model onto `aligned`
  double rmse = 0.0;         // nearest-point RMS against the data, meters
  int iterations = 0;
  bool degenerate = false;         // stopped on a degenerate alignment, state is last good
  std::vector<double> mse_trace;   // mean squared correspondence error, starting pre-alignment
};

IcpResult icp(const PointCloud& model, const PointCloud& data, const IcpConfig& cfg);
IcpResult icp(const PointCloud& model, const NNIndex& data_index, const IcpConfig& cfg);

enum class PerturbMode {
  Rigid,     // one shared rotation and one shared translation draw
  PerPoint,  // shared rotation, independent translation noise per point (experimental)
};

struct Perturbation {
  PointCloud cloud;
  Mat3 rotation = Mat3::Identity();
  Vec3 shift = Vec3::Zero();  // zero in PerPoint mode, where the noise is not rigid
};

/// m'_j = R_rand * m_j + s with the rotation about the origin and
/// s ~ N(0, sigma^2 I).
Perturbation perturb(const PointCloud& model, double sigma, Rng& rng,
                     PerturbMode mode = PerturbMode::Rigid);

/// Deterministic applier behind perturb; exposed as the test hook for forcing
/// a specific rotation and shift.
PointCloud apply_perturbation(const PointCloud& model, const Mat3& rotation, const Vec3& shift);

struct StochasticIcpConfig {
  int trials = 50;       // n
  double sigma = 0.1;    // perturbation scale, meters
  int inner_max_iter = 10;
  int final_max_iter = 30;
  double err = 1e-5;
  std::uint64_t seed = 0;
  bool per_point_noise = false;     // experimental reading of the perturbation
  bool identity_perturbation = false;  // test hook: skip the random draw
  int threads = 0;                  // 0 = hardware concurrency
};

struct StochasticIcpResult {
  PointCloud best;
  RigidTransform transform;  // maps the original input model onto `best`
  double rmse = 0.0;
  int best_trial = -1;
};

/// Multi-start ICP: `trials` independent perturb-then-align runs, the
/// candidate closest to the data (nearest-point RMS, ties to the lowest trial
/// index) is refined by a final ICP pass. Trial seeds derive from (seed,
/// trial), so results do not depend on scheduling.
StochasticIcpResult stochastic_icp(const PointCloud& model, const PointCloud& data,
                                   const StochasticIcpConfig& cfg);

}  // namespace handpose
