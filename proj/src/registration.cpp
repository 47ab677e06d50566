#include "handpose/registration.hpp"

#include "handpose/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>

namespace handpose {

CorrespondenceSet find_correspondences(const PointCloud& model, const NNIndex& data_index) {
  if (model.empty()) throw std::invalid_argument("find_correspondences: empty model");
  CorrespondenceSet corr;
  corr.pairs.reserve(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    corr.pairs.emplace_back(i, data_index.nearest(model[i]).index);
  }
  return corr;
}

PairedDeviations demean_paired(const PointCloud& model, const PointCloud& data,
                               const CorrespondenceSet& corr) {
  if (corr.pairs.empty()) throw std::invalid_argument("demean_paired: no correspondences");
  Vec3 mu_m = Vec3::Zero(), mu_p = Vec3::Zero();
  for (const auto& [mi, di] : corr.pairs) {
    mu_m += model[mi];
    mu_p += data[di];
  }
  const double inv = 1.0 / static_cast<double>(corr.pairs.size());
  mu_m *= inv;
  mu_p *= inv;

  PairedDeviations out;
  out.model_centroid = mu_m;
  out.data_centroid = mu_p;
  out.model_dev.points.reserve(model.size());
  for (const Vec3& p : model) out.model_dev.push_back(p - mu_m);
  out.data_dev.points.reserve(data.size());
  for (const Vec3& p : data) out.data_dev.push_back(p - mu_p);
  return out;
}

namespace {

Mat3 cross_covariance(const PointCloud& model_dev, const PointCloud& data_dev,
                      const CorrespondenceSet& corr) {
  Mat3 n = Mat3::Zero();
  for (const auto& [mi, di] : corr.pairs) {
    n += data_dev[di] * model_dev[mi].transpose();
  }
  return n;
}

}  // namespace

AlignmentResult svd_align(const PointCloud& model, const PointCloud& data,
                          const CorrespondenceSet& corr) {
  if (corr.pairs.size() < 3) throw DegenerateError("svd_align: fewer than 3 correspondences");

  const PairedDeviations dev = demean_paired(model, data, corr);
  const Mat3 n = cross_covariance(dev.model_dev, dev.data_dev, corr);

  Eigen::JacobiSVD<Mat3> svd(n, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sigma = svd.singularValues();  // descending, nonnegative
  if (sigma(0) <= 0.0 || sigma(1) <= sigma(0) * 1e-12) {
    throw DegenerateError("svd_align: degenerate configuration (rank < 2)");
  }

  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    r = svd.matrixU() * Vec3(1, 1, -1).asDiagonal() * svd.matrixV().transpose();
  }
  const Vec3 t = dev.data_centroid - r * dev.model_centroid;

  double residual = 0.0;
  for (const auto& [mi, di] : corr.pairs) {
    residual += (data[di] - (r * model[mi] + t)).squaredNorm();
  }
  AlignmentResult result;
  result.transform = RigidTransform(r, t);
  result.residual_error = residual;
  result.singular_values = sigma;
  return result;
}

double closed_form_error(const PointCloud& model_dev, const PointCloud& data_dev,
                         const CorrespondenceSet& corr, const Vec3& singular_values) {
  if (corr.pairs.empty()) throw std::invalid_argument("closed_form_error: no correspondences");
  double squares = 0.0;
  for (const auto& [mi, di] : corr.pairs) {
    if (mi >= model_dev.size() || di >= data_dev.size()) {
      throw std::invalid_argument("closed_form_error: correspondence out of range");
    }
    squares += data_dev[di].squaredNorm() + model_dev[mi].squaredNorm();
  }
  // The last singular value enters with the sign of det(N): the reflection
  // correction flips it whenever the optimal proper rotation requires it.
  const double sign = cross_covariance(model_dev, data_dev, corr).determinant() < 0.0 ? -1.0 : 1.0;
  const Vec3& s = singular_values;
  return squares - 2.0 * (s(0) + s(1) + sign * s(2));
}

IcpResult icp(const PointCloud& model, const PointCloud& data, const IcpConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("icp: empty data cloud");
  NNIndex index(data);
  return icp(model, index, cfg);
}

IcpResult icp(const PointCloud& model, const NNIndex& data_index, const IcpConfig& cfg) {
  if (model.empty()) throw std::invalid_argument("icp: empty model cloud");
  if (cfg.max_iter < 1) throw std::invalid_argument("icp: max_iter must be >= 1");
  if (!(cfg.err > 0.0)) throw std::invalid_argument("icp: err must be positive");

  PointCloud data;
  data.points.reserve(data_index.size());
  for (std::size_t i = 0; i < data_index.size(); ++i) data.push_back(data_index.point(i));

  IcpResult result;
  result.aligned = model;
  result.transform = RigidTransform::identity();

  const double inv_pairs = 1.0 / static_cast<double>(model.size());
  CorrespondenceSet corr = find_correspondences(result.aligned, data_index);
  double prev_mse = 0.0;
  for (const auto& [mi, di] : corr.pairs) {
    prev_mse += (data[di] - result.aligned[mi]).squaredNorm() * inv_pairs;
  }
  result.mse_trace.push_back(prev_mse);

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    AlignmentResult step;
    try {
      step = svd_align(result.aligned, data, corr);
    } catch (const DegenerateError&) {
      result.degenerate = true;
      break;
    }
    result.aligned = apply_transform(result.aligned, step.transform);
    result.transform = compose(step.transform, result.transform);
    result.iterations = iter + 1;

    const double mse = step.residual_error * inv_pairs;
    assert(mse <= prev_mse * (1.0 + 1e-9) + 1e-24);
    result.mse_trace.push_back(mse);

    const double rel_change = std::abs(prev_mse - mse) / std::max(prev_mse, 1e-30);
    prev_mse = mse;
    if (rel_change < cfg.err) break;

    if (iter + 1 < cfg.max_iter) {
      corr = find_correspondences(result.aligned, data_index);
    }
  }

  result.rmse = rms_nearest(result.aligned, data_index);
  return result;
}

PointCloud apply_perturbation(const PointCloud& model, const Mat3& rotation, const Vec3& shift) {
  PointCloud out;
  out.points.reserve(model.size());
  for (const Vec3& p : model) out.push_back(rotation * p + shift);
  return out;
}

Perturbation perturb(const PointCloud& model, double sigma, Rng& rng, PerturbMode mode) {
  if (sigma < 0.0) throw std::invalid_argument("perturb: sigma must be nonnegative");
  Perturbation out;
  out.rotation = random_rotation(rng);
  if (mode == PerturbMode::Rigid) {
    out.shift = sigma > 0.0 ? rng.gaussian_vec3(sigma) : Vec3::Zero();
    out.cloud = apply_perturbation(model, out.rotation, out.shift);
  } else {
    out.cloud.points.reserve(model.size());
    for (const Vec3& p : model) {
      out.cloud.push_back(out.rotation * p + rng.gaussian_vec3(sigma));
    }
  }
  return out;
}

namespace {

struct Trial {
  PointCloud aligned;
  RigidTransform transform;  // original model -> aligned
  double score = std::numeric_limits<double>::infinity();
  bool valid = false;
};

Trial run_trial(const PointCloud& model, const NNIndex& data_index,
                const StochasticIcpConfig& cfg, int trial_index) {
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(trial_index)));

  Mat3 r_rand = Mat3::Identity();
  Vec3 shift = Vec3::Zero();
  PointCloud start;
  if (cfg.identity_perturbation) {
    start = model;
  } else {
    const PerturbMode mode = cfg.per_point_noise ? PerturbMode::PerPoint : PerturbMode::Rigid;
    Perturbation p = perturb(model, cfg.sigma, rng, mode);
    r_rand = p.rotation;
    shift = p.shift;
    start = std::move(p.cloud);
  }

  IcpConfig inner;
  inner.max_iter = cfg.inner_max_iter;
  inner.err = cfg.err;
  const IcpResult res = icp(start, data_index, inner);

  Trial t;
  if (res.degenerate && res.iterations == 0) return t;  // nothing useful happened
  t.aligned = res.aligned;
  t.transform = compose(res.transform, RigidTransform(r_rand, shift));
  t.score = rms_nearest(t.aligned, data_index);
  t.valid = true;
  return t;
}

}  // namespace

StochasticIcpResult stochastic_icp(const PointCloud& model, const PointCloud& data,
                                   const StochasticIcpConfig& cfg) {
  if (model.empty() || data.empty()) throw std::invalid_argument("stochastic_icp: empty cloud");
  if (cfg.trials < 1) throw std::invalid_argument("stochastic_icp: trials must be >= 1");
  if (cfg.sigma < 0.0) throw std::invalid_argument("stochastic_icp: sigma must be nonnegative");

  const NNIndex data_index(data);
  std::vector<Trial> trials(cfg.trials);

  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(cfg.trials));

  if (n_threads <= 1) {
    for (int i = 0; i < cfg.trials; ++i) trials[i] = run_trial(model, data_index, cfg, i);
  } else {
    std::vector<std::future<void>> futures;
    futures.reserve(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) {
      futures.push_back(std::async(std::launch::async, [&, w]() {
        for (int i = static_cast<int>(w); i < cfg.trials; i += static_cast<int>(n_threads)) {
          trials[i] = run_trial(model, data_index, cfg, i);
        }
      }));
    }
    for (auto& f : futures) f.get();
  }

  int best = -1;
  for (int i = 0; i < cfg.trials; ++i) {
    if (!trials[i].valid) continue;
    if (best < 0 || trials[i].score < trials[best].score) best = i;
  }
  if (best < 0) throw DegenerateError("stochastic_icp: all trials degenerate");

  IcpConfig final_cfg;
  final_cfg.max_iter = cfg.final_max_iter;
  final_cfg.err = cfg.err;
  const IcpResult final_res = icp(trials[best].aligned, data_index, final_cfg);

  StochasticIcpResult result;
  result.best = final_res.aligned;
  result.transform = compose(final_res.transform, trials[best].transform);
  result.rmse = final_res.rmse;
  result.best_trial = best;
  return result;
}

}  // namespace handpose
