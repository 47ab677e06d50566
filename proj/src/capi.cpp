#include "handpose.h"

#include "handpose/clustering.hpp"
#include "handpose/errors.hpp"
#include "handpose/hand_model.hpp"
#include "handpose/io.hpp"
#include "handpose/pipeline.hpp"
#include "handpose/plane.hpp"
#include "handpose/registration.hpp"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

struct hp_cloud {
  handpose::PointCloud cloud;
};

namespace {

thread_local std::string g_last_error;

hp_status fail(hp_status status, const char* what) {
  g_last_error = what ? what : "unknown error";
  return status;
}

// Maps the library's exception types onto C status codes.
template <typename Fn>
hp_status guarded(Fn&& fn) {
  try {
    fn();
    return HP_OK;
  } catch (const std::invalid_argument& e) {
    return fail(HP_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const handpose::ParseError& e) {
    return fail(HP_ERROR_PARSE, e.what());
  } catch (const handpose::IoError& e) {
    return fail(HP_ERROR_IO, e.what());
  } catch (const handpose::DegenerateError& e) {
    return fail(HP_ERROR_DEGENERATE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(HP_ERROR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(HP_ERROR_RUNTIME, e.what());
  }
}

hp_status require(bool ok, const char* what) {
  return ok ? HP_OK : fail(HP_ERROR_INVALID_ARGUMENT, what);
}

hp_transform to_c(const handpose::RigidTransform& T) {
  hp_transform out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.r[3 * r + c] = T.R(r, c);
  }
  for (int i = 0; i < 3; ++i) out.t[i] = T.t(i);
  return out;
}

handpose::RigidTransform from_c(const hp_transform& T) {
  handpose::Mat3 r;
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 3; ++c) r(i, c) = T.r[3 * i + c];
  }
  return handpose::RigidTransform(r, handpose::Vec3(T.t[0], T.t[1], T.t[2]));
}

}  // namespace

extern "C" {

const char* hp_version(void) { return "1.0.0"; }

const char* hp_last_error(void) { return g_last_error.c_str(); }

hp_status hp_cloud_create(const double* xyz, size_t count, hp_cloud** out) {
  if (hp_status s = require(out && (xyz || count == 0), "hp_cloud_create: null argument")) return s;
  return guarded([&] {
    auto cloud = std::make_unique<hp_cloud>();
    cloud->cloud.points.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      cloud->cloud.push_back(handpose::Vec3(xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]));
    }
    *out = cloud.release();
  });
}

hp_status hp_cloud_read(const char* path, hp_cloud** out) {
  if (hp_status s = require(path && out, "hp_cloud_read: null argument")) return s;
  return guarded([&] {
    auto cloud = std::make_unique<hp_cloud>();
    cloud->cloud = handpose::read_cloud(path);
    *out = cloud.release();
  });
}

hp_status hp_cloud_write(const hp_cloud* cloud, const char* path) {
  if (hp_status s = require(cloud && path, "hp_cloud_write: null argument")) return s;
  return guarded([&] { handpose::write_cloud(cloud->cloud, path); });
}

size_t hp_cloud_size(const hp_cloud* cloud) { return cloud ? cloud->cloud.size() : 0; }

hp_status hp_cloud_copy_points(const hp_cloud* cloud, double* xyz_out) {
  if (hp_status s = require(cloud && xyz_out, "hp_cloud_copy_points: null argument")) return s;
  for (size_t i = 0; i < cloud->cloud.size(); ++i) {
    xyz_out[3 * i] = cloud->cloud[i].x();
    xyz_out[3 * i + 1] = cloud->cloud[i].y();
    xyz_out[3 * i + 2] = cloud->cloud[i].z();
  }
  return HP_OK;
}

void hp_cloud_free(hp_cloud* cloud) { delete cloud; }

hp_status hp_segment_plane(const hp_cloud* cloud, double tau, int max_iterations,
                           long long min_consensus, uint64_t seed, hp_cloud** foreground_out,
                           hp_plane* plane_out) {
  if (hp_status s = require(cloud && foreground_out, "hp_segment_plane: null argument")) return s;
  return guarded([&] {
    handpose::RansacConfig cfg;
    cfg.tau = tau;
    cfg.max_iterations = max_iterations;
    cfg.min_consensus = min_consensus;
    cfg.seed = seed;
    const handpose::RansacResult fit = handpose::fit_plane_ransac(cloud->cloud, cfg);
    auto fg = std::make_unique<hp_cloud>();
    fg->cloud = handpose::remove_background(cloud->cloud, fit.plane, tau);
    if (plane_out) {
      plane_out->nx = fit.plane.n.x();
      plane_out->ny = fit.plane.n.y();
      plane_out->nz = fit.plane.n.z();
      plane_out->d = fit.plane.d;
    }
    *foreground_out = fg.release();
  });
}

hp_status hp_plane_write(const hp_plane* plane, const char* path) {
  if (hp_status s = require(plane && path, "hp_plane_write: null argument")) return s;
  return guarded([&] {
    handpose::PlaneModel p;
    p.n = handpose::Vec3(plane->nx, plane->ny, plane->nz);
    p.d = plane->d;
    handpose::write_plane(p, path);
  });
}

hp_status hp_cluster(const hp_cloud* cloud, const hp_cluster_params* params, int32_t* labels_out,
                     int32_t* cluster_count_out) {
  if (hp_status s = require(cloud && params && labels_out && cluster_count_out,
                            "hp_cluster: null argument")) {
    return s;
  }
  return guarded([&] {
    handpose::ClusterLabeling labeling;
    switch (params->algo) {
      case HP_CLUSTER_DBSCAN:
        labeling = handpose::dbscan(cloud->cloud, {params->eps, params->min_pts});
        break;
      case HP_CLUSTER_ECE:
        labeling =
            handpose::euclidean_cluster_extraction(cloud->cloud, params->radius, params->min_size);
        break;
      case HP_CLUSTER_KMEANS:
        labeling = handpose::kmeans(cloud->cloud, params->k, params->seed, params->max_iterations);
        break;
      default:
        throw std::invalid_argument("hp_cluster: unknown algorithm");
    }
    for (size_t i = 0; i < labeling.labels.size(); ++i) {
      labels_out[i] = static_cast<int32_t>(labeling.labels[i]);
    }
    *cluster_count_out = static_cast<int32_t>(labeling.cluster_count);
  });
}

hp_status hp_generate_model(const char* skeleton_path, const char* spec_path, double viewpoint_x,
                            double viewpoint_y, double viewpoint_z, double density, uint64_t seed,
                            hp_cloud** out) {
  if (hp_status s = require(skeleton_path && spec_path && out, "hp_generate_model: null argument")) {
    return s;
  }
  return guarded([&] {
    const handpose::HandSkeleton skeleton = handpose::load_skeleton(skeleton_path);
    const handpose::ModelSpec spec = handpose::read_model_spec(spec_path);
    auto cloud = std::make_unique<hp_cloud>();
    cloud->cloud = handpose::generate_from_spec(
        spec, skeleton, handpose::Vec3(viewpoint_x, viewpoint_y, viewpoint_z), density, seed);
    *out = cloud.release();
  });
}

hp_status hp_generate_scene(const char* spec_path, uint64_t seed_override, int use_seed_override,
                            const char* cloud_path, const char* truth_path) {
  if (hp_status s = require(spec_path && cloud_path && truth_path,
                            "hp_generate_scene: null argument")) {
    return s;
  }
  return guarded([&] {
    handpose::SceneSpec spec = handpose::read_scene_spec(spec_path);
    if (use_seed_override) spec.seed = seed_override;
    auto [cloud, truth] = handpose::generate_scene(spec);
    handpose::write_cloud(cloud, cloud_path);
    handpose::write_scene_truth(truth, truth_path);
  });
}

hp_status hp_register_clouds(const hp_cloud* model, const hp_cloud* data,
                             const hp_register_params* params, hp_register_result* result_out,
                             hp_cloud** aligned_out) {
  if (hp_status s = require(model && data && params && result_out,
                            "hp_register_clouds: null argument")) {
    return s;
  }
  return guarded([&] {
    handpose::PointCloud aligned;
    if (params->mode == HP_REGISTER_STANDARD) {
      handpose::IcpConfig cfg;
      cfg.max_iter = params->max_iterations;
      cfg.err = params->err;
      handpose::IcpResult r = handpose::icp(model->cloud, data->cloud, cfg);
      result_out->transform = to_c(r.transform);
      result_out->rmse = r.rmse;
      result_out->iterations = r.iterations;
      aligned = std::move(r.aligned);
    } else if (params->mode == HP_REGISTER_STOCHASTIC) {
      handpose::StochasticIcpConfig cfg;
      cfg.trials = params->trials;
      cfg.sigma = params->sigma;
      cfg.inner_max_iter = params->inner_max_iterations;
      cfg.final_max_iter = params->max_iterations;
      cfg.err = params->err;
      cfg.seed = params->seed;
      handpose::StochasticIcpResult r = handpose::stochastic_icp(model->cloud, data->cloud, cfg);
      result_out->transform = to_c(r.transform);
      result_out->rmse = r.rmse;
      result_out->iterations = 0;
      aligned = std::move(r.best);
    } else {
      throw std::invalid_argument("hp_register_clouds: unknown mode");
    }
    if (aligned_out) {
      auto cloud = std::make_unique<hp_cloud>();
      cloud->cloud = std::move(aligned);
      *aligned_out = cloud.release();
    }
  });
}

hp_status hp_transform_write(const hp_transform* transform, const char* path) {
  if (hp_status s = require(transform && path, "hp_transform_write: null argument")) return s;
  return guarded([&] { handpose::write_transform(from_c(*transform), path); });
}

hp_status hp_run_sequence(const char* config_path, const char* const* frame_paths,
                          size_t frame_count, uint64_t seed_override, int use_seed_override,
                          const char* metrics_csv_path, const char* poses_path,
                          size_t* frames_succeeded_out, size_t* frames_failed_out) {
  if (hp_status s = require(config_path && frame_paths && metrics_csv_path && poses_path,
                            "hp_run_sequence: null argument")) {
    return s;
  }
  return guarded([&] {
    handpose::PipelineConfig cfg = handpose::read_pipeline_config(config_path);
    if (use_seed_override) cfg.seed = seed_override;
    std::vector<std::string> files(frame_paths, frame_paths + frame_count);
    const handpose::SequenceResult result = handpose::run_sequence(files, cfg);
    if (result.frames.empty()) {
      std::string msg = "hp_run_sequence: every frame failed";
      for (const std::string& e : result.errors) msg += "; " + e;
      throw handpose::DegenerateError(msg);
    }
    handpose::write_frame_metrics(result.frames, metrics_csv_path);
    handpose::write_pose_log(result, poses_path);
    if (frames_succeeded_out) *frames_succeeded_out = result.frames.size();
    if (frames_failed_out) *frames_failed_out = result.errors.size();
  });
}

}  // extern "C"
