#include "handpose/pipeline.hpp"

#include "handpose/errors.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace handpose {

namespace fs = std::filesystem;

std::vector<double> probabilities(const std::vector<double>& rmse) {
  if (rmse.empty()) throw std::invalid_argument("probabilities: empty rmse list");
  std::vector<double> out(rmse.size());
  double total = 0.0;
  for (std::size_t i = 0; i < rmse.size(); ++i) {
    const double r = rmse[i];
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("probabilities: rmse values must be finite and nonnegative");
    }
    out[i] = 1.0 / std::max(r, 1e-9);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Static: return "static";
    case Phase::Detection: return "detection";
    case Phase::Separate: return "separate";
    case Phase::Merged: return "merged";
  }
  return "static";
}

std::vector<ModelState> make_states(const ModelLibrary& library) {
  std::vector<ModelState> states;
  states.reserve(library.models.size());
  for (const LibraryModel& m : library.models) {
    ModelState s;
    s.name = m.name;
    s.category = m.category;
    s.canonical = m.cloud;
    s.current = m.cloud;
    s.pose = RigidTransform::identity();
    states.push_back(std::move(s));
  }
  return states;
}

int detect_merge(const std::vector<int>& cluster_counts) {
  if (cluster_counts.empty()) throw std::invalid_argument("detect_merge: empty history");
  if (cluster_counts.front() == 1) {
    throw std::invalid_argument("detect_merge: expected two clusters at start");
  }
  for (std::size_t i = 1; i < cluster_counts.size(); ++i) {
    if (cluster_counts[i] == 1) return static_cast<int>(i);
  }
  return -1;
}

Pipeline::Pipeline(ModelLibrary library, PipelineConfig cfg)
    : states_(make_states(library)),
      cfg_(std::move(cfg)),
      phase_(cfg_.strategy == Strategy::Static ? Phase::Static : Phase::Detection) {
  if (states_.empty()) throw std::invalid_argument("pipeline: no models");
  const bool has_gesture = library.has_category(ModelCategory::Gesture);
  if (cfg_.strategy == Strategy::Static) {
    if (!has_gesture) {
      throw std::invalid_argument("pipeline: static strategy requires a gesture model");
    }
  } else {
    if (!has_gesture || !library.has_category(ModelCategory::Object) ||
        !library.has_category(ModelCategory::Interaction)) {
      throw std::invalid_argument(
          "pipeline: grasping strategy requires gesture, object and interaction models");
    }
  }
}

StochasticIcpConfig Pipeline::stochastic_for(std::uint64_t seed) const {
  StochasticIcpConfig s = cfg_.stochastic;
  s.seed = seed;
  return s;
}

FrameResult Pipeline::commit_frame(int frame_index, Phase phase, const std::vector<double>& rmse,
                                   const std::vector<RigidTransform>& applied) {
  int selected = 0;
  for (std::size_t i = 1; i < rmse.size(); ++i) {
    if (rmse[i] < rmse[selected]) selected = static_cast<int>(i);
  }

  for (std::size_t i = 0; i < states_.size(); ++i) {
    states_[i].current = apply_transform(states_[i].current, applied[i]);
    states_[i].pose = compose(applied[i], states_[i].pose);
  }

  FrameResult fr;
  fr.frame = frame_index;
  fr.phase = phase;
  fr.rmse = rmse;
  fr.probability = probabilities(rmse);
  for (const ModelState& s : states_) fr.model_names.push_back(s.name);
  fr.selected = states_[selected].name;
  fr.best = applied[selected];
  fr.detected_object = detected_object_;
  return fr;
}

FrameResult Pipeline::match_static(const PointCloud& frame_cloud, int frame_index) {
  if (frame_cloud.empty()) throw std::invalid_argument("match_static: empty frame cloud");

  const NNIndex data_index(frame_cloud);
  const std::uint64_t match_seed =
      derive_seed(cfg_.seed, 3 * static_cast<std::uint64_t>(frame_index) + 2);

  std::vector<double> rmse(states_.size(), 0.0);
  std::vector<RigidTransform> per_model(states_.size());
  std::vector<bool> matched(states_.size(), false);

  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i].category != ModelCategory::Gesture) {
      rmse[i] = rms_nearest(states_[i].current, data_index);
      continue;
    }
    if (first_) {
      const StochasticIcpResult r =
          stochastic_icp(states_[i].current, frame_cloud, stochastic_for(derive_seed(match_seed, i)));
      rmse[i] = r.rmse;
      per_model[i] = r.transform;
    } else {
      const IcpResult r = icp(states_[i].current, data_index, cfg_.icp);
      rmse[i] = r.rmse;
      per_model[i] = r.transform;
    }
    matched[i] = true;
  }

  // The whole dataset shares one viewpoint and placement, so the best match's
  // transform updates every model.
  int best = -1;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (!matched[i]) continue;
    if (best < 0 || rmse[i] < rmse[best]) best = static_cast<int>(i);
  }
  const RigidTransform best_t = best >= 0 ? per_model[best] : RigidTransform::identity();
  const std::vector<RigidTransform> applied(states_.size(), best_t);

  first_ = false;
  return commit_frame(frame_index, Phase::Static, rmse, applied);
}

FrameResult Pipeline::match_grasp(const std::vector<PointCloud>& clusters, int frame_index) {
  if (cfg_.strategy != Strategy::Grasping) {
    throw std::invalid_argument("match_grasp: pipeline not configured for grasping");
  }
  if (clusters.empty()) throw std::invalid_argument("match_grasp: no clusters");
  if (clusters.size() > 2) throw std::invalid_argument("match_grasp: unsupported cluster count");
  for (const PointCloud& c : clusters) {
    if (c.empty()) throw std::invalid_argument("match_grasp: empty cluster");
  }
  if (clusters.size() == 1 && first_) {
    throw std::invalid_argument("match_grasp: expected two clusters at start");
  }

  const std::uint64_t match_seed =
      derive_seed(cfg_.seed, 3 * static_cast<std::uint64_t>(frame_index) + 2);

  PointCloud all;
  for (const PointCloud& c : clusters) {
    all.points.insert(all.points.end(), c.begin(), c.end());
  }
  const NNIndex all_index(all);

  std::vector<double> rmse(states_.size(), 0.0);
  std::vector<RigidTransform> applied(states_.size());

  if (merged_ || clusters.size() == 1) {
    // Clusters merged: only the interaction models are matched, with the
    // stochastic search for robustness near the transition.
    merged_ = true;
    phase_ = Phase::Merged;
    int best = -1;
    std::vector<RigidTransform> per_model(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) {
      if (states_[i].category != ModelCategory::Interaction) {
        rmse[i] = rms_nearest(states_[i].current, all_index);
        continue;
      }
      const StochasticIcpResult r =
          stochastic_icp(states_[i].current, all, stochastic_for(derive_seed(match_seed, i)));
      rmse[i] = r.rmse;
      per_model[i] = r.transform;
      if (best < 0 || rmse[i] < rmse[best]) best = static_cast<int>(i);
    }
    const RigidTransform best_t = best >= 0 ? per_model[best] : RigidTransform::identity();
    applied.assign(states_.size(), best_t);
    first_ = false;
    return commit_frame(frame_index, Phase::Merged, rmse, applied);
  }

  // Two separate clusters.
  const Vec3 c0 = centroid(clusters[0]);
  const Vec3 c1 = centroid(clusters[1]);
  int object_cluster = -1;
  RigidTransform object_t, hand_t;
  Phase phase = Phase::Separate;

  if (first_) {
    phase = Phase::Detection;
    std::vector<NNIndex> cluster_index;
    cluster_index.reserve(2);
    for (const PointCloud& c : clusters) cluster_index.emplace_back(c);

    // Object detection: every object model against both clusters; the pair
    // with the smallest error labels the object cluster.
    double best_err = std::numeric_limits<double>::infinity();
    int best_obj = -1;
    std::vector<std::array<double, 2>> obj_err(states_.size());
    std::vector<std::array<RigidTransform, 2>> obj_t(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) {
      if (states_[i].category != ModelCategory::Object) continue;
      for (int c = 0; c < 2; ++c) {
        const StochasticIcpResult r = stochastic_icp(
            states_[i].current, clusters[c],
            stochastic_for(derive_seed(match_seed, 2 * i + static_cast<std::size_t>(c))));
        obj_err[i][c] = r.rmse;
        obj_t[i][c] = r.transform;
        if (r.rmse < best_err) {
          best_err = r.rmse;
          best_obj = static_cast<int>(i);
          object_cluster = c;
        }
      }
    }
    detected_object_ = states_[best_obj].name;
    object_t = obj_t[best_obj][object_cluster];
    const int hand_cluster = 1 - object_cluster;

    // Hand pose detection on the remaining cluster.
    double best_hand = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < states_.size(); ++i) {
      switch (states_[i].category) {
        case ModelCategory::Object:
          rmse[i] = obj_err[i][object_cluster];
          break;
        case ModelCategory::Gesture: {
          const StochasticIcpResult r =
              stochastic_icp(states_[i].current, clusters[hand_cluster],
                             stochastic_for(derive_seed(match_seed, 1000 + i)));
          rmse[i] = r.rmse;
          if (r.rmse < best_hand) {
            best_hand = r.rmse;
            hand_t = r.transform;
          }
          break;
        }
        case ModelCategory::Interaction:
          rmse[i] = rms_nearest(states_[i].current, all_index);
          break;
      }
    }
  } else {
    // Track the cluster-to-model assignment by centroid proximity.
    const double keep = (c0 - prev_object_centroid_).norm() + (c1 - prev_hand_centroid_).norm();
    const double swap = (c1 - prev_object_centroid_).norm() + (c0 - prev_hand_centroid_).norm();
    object_cluster = keep <= swap ? 0 : 1;
    const int hand_cluster = 1 - object_cluster;
    const NNIndex object_index(clusters[object_cluster]);
    const NNIndex hand_index(clusters[hand_cluster]);

    double best_hand = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < states_.size(); ++i) {
      switch (states_[i].category) {
        case ModelCategory::Object:
          if (states_[i].name == detected_object_) {
            const IcpResult r = icp(states_[i].current, object_index, cfg_.icp);
            rmse[i] = r.rmse;
            object_t = r.transform;
          } else {
            rmse[i] = rms_nearest(states_[i].current, all_index);
          }
          break;
        case ModelCategory::Gesture: {
          const IcpResult r = icp(states_[i].current, hand_index, cfg_.icp);
          rmse[i] = r.rmse;
          if (r.rmse < best_hand) {
            best_hand = r.rmse;
            hand_t = r.transform;
          }
          break;
        }
        case ModelCategory::Interaction:
          rmse[i] = rms_nearest(states_[i].current, all_index);
          break;
      }
    }
  }

  // Object models follow the object cluster, everything hand-shaped follows
  // the hand cluster.
  for (std::size_t i = 0; i < states_.size(); ++i) {
    applied[i] = states_[i].category == ModelCategory::Object ? object_t : hand_t;
  }

  prev_object_centroid_ = object_cluster == 0 ? c0 : c1;
  prev_hand_centroid_ = object_cluster == 0 ? c1 : c0;
  first_ = false;
  phase_ = Phase::Separate;

  FrameResult fr = commit_frame(frame_index, phase, rmse, applied);
  fr.object_cluster = object_cluster;
  return fr;
}

FrameResult Pipeline::process_frame(const PointCloud& raw_frame, int frame_index) {
  if (raw_frame.empty()) throw std::invalid_argument("process_frame: empty frame");

  RansacConfig rc = cfg_.ransac;
  rc.seed = derive_seed(cfg_.seed, 3 * static_cast<std::uint64_t>(frame_index));
  const RansacResult fit = fit_plane_ransac(raw_frame, rc);
  const PointCloud foreground = remove_background(raw_frame, fit.plane, rc.tau);
  if (foreground.empty()) throw DegenerateError("process_frame: frame is background only");

  ClusterLabeling labeling;
  switch (cfg_.clustering.algo) {
    case ClusteringParams::Algo::Dbscan:
      labeling = dbscan(foreground, {cfg_.clustering.eps, cfg_.clustering.min_pts});
      break;
    case ClusteringParams::Algo::Ece:
      labeling = euclidean_cluster_extraction(foreground, cfg_.clustering.radius,
                                              cfg_.clustering.min_size);
      break;
    case ClusteringParams::Algo::Kmeans:
      labeling = kmeans(foreground, cfg_.clustering.k,
                        derive_seed(cfg_.seed, 3 * static_cast<std::uint64_t>(frame_index) + 1),
                        cfg_.clustering.max_iters);
      break;
  }
  const std::vector<PointCloud> clusters = extract_clusters(foreground, labeling);
  if (clusters.empty()) throw DegenerateError("process_frame: no clusters above noise");

  if (cfg_.strategy == Strategy::Static) {
    // The frame's subject is the largest cluster; smaller ones are stragglers.
    std::size_t largest = 0;
    for (std::size_t i = 1; i < clusters.size(); ++i) {
      if (clusters[i].size() > clusters[largest].size()) largest = i;
    }
    return match_static(clusters[largest], frame_index);
  }
  return match_grasp(clusters, frame_index);
}

SequenceResult run_sequence(const std::vector<std::string>& frame_files,
                            const PipelineConfig& cfg) {
  if (frame_files.empty()) throw std::invalid_argument("run_sequence: no frames");
  const ModelLibrary library = load_model_library(cfg.manifest_path);
  Pipeline pipeline(library, cfg);

  SequenceResult out;
  for (const LibraryModel& m : library.models) out.model_names.push_back(m.name);

  for (std::size_t k = 0; k < frame_files.size(); ++k) {
    try {
      const PointCloud cloud = read_cloud(frame_files[k]);
      FrameResult fr = pipeline.process_frame(cloud, static_cast<int>(k));
      out.frames.push_back(std::move(fr));
      std::vector<RigidTransform> poses;
      poses.reserve(pipeline.states().size());
      for (const ModelState& s : pipeline.states()) poses.push_back(s.pose);
      out.poses.push_back(std::move(poses));
    } catch (const std::exception& e) {
      out.errors.push_back("frame " + std::to_string(k) + " (" + frame_files[k] + "): " + e.what());
    }
  }
  return out;
}

PipelineConfig read_pipeline_config(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  JsonObject root(j, path);
  PipelineConfig cfg;

  const std::string strategy = json_string(root.at("strategy"), path + ": strategy");
  if (strategy == "static") {
    cfg.strategy = Strategy::Static;
  } else if (strategy == "grasping") {
    cfg.strategy = Strategy::Grasping;
  } else {
    throw ParseError(path + ": unknown strategy '" + strategy + "'");
  }

  const fs::path base = fs::path(path).parent_path();
  cfg.manifest_path = (base / json_string(root.at("manifest"), path + ": manifest")).string();
  if (const auto* s = root.maybe("seed")) cfg.seed = json_u64(*s, path + ": seed");

  if (const auto* rj = root.maybe("ransac")) {
    JsonObject r(*rj, path + ": ransac");
    if (const auto* v = r.maybe("tau")) cfg.ransac.tau = json_double(*v, path);
    if (const auto* v = r.maybe("max_iterations")) cfg.ransac.max_iterations = json_int(*v, path);
    if (const auto* v = r.maybe("min_consensus")) cfg.ransac.min_consensus = json_int(*v, path);
    r.done();
  }
  if (const auto* cj = root.maybe("clustering")) {
    JsonObject c(*cj, path + ": clustering");
    const std::string algo = json_string(c.at("algo"), path + ": clustering.algo");
    if (algo == "dbscan") {
      cfg.clustering.algo = ClusteringParams::Algo::Dbscan;
      if (const auto* v = c.maybe("eps")) cfg.clustering.eps = json_double(*v, path);
      if (const auto* v = c.maybe("min_pts")) cfg.clustering.min_pts = json_int(*v, path);
    } else if (algo == "ece") {
      cfg.clustering.algo = ClusteringParams::Algo::Ece;
      if (const auto* v = c.maybe("radius")) cfg.clustering.radius = json_double(*v, path);
      if (const auto* v = c.maybe("min_size")) cfg.clustering.min_size = json_int(*v, path);
    } else if (algo == "kmeans") {
      cfg.clustering.algo = ClusteringParams::Algo::Kmeans;
      cfg.clustering.k = json_int(c.at("k"), path + ": clustering.k");
      if (const auto* v = c.maybe("max_iterations")) cfg.clustering.max_iters = json_int(*v, path);
    } else {
      throw ParseError(path + ": unknown clustering algo '" + algo + "'");
    }
    c.done();
  }
  if (const auto* ij = root.maybe("icp")) {
    JsonObject i(*ij, path + ": icp");
    if (const auto* v = i.maybe("max_iterations")) cfg.icp.max_iter = json_int(*v, path);
    if (const auto* v = i.maybe("err")) cfg.icp.err = json_double(*v, path);
    i.done();
  }
  if (const auto* sj = root.maybe("stochastic")) {
    JsonObject s(*sj, path + ": stochastic");
    if (const auto* v = s.maybe("trials")) cfg.stochastic.trials = json_int(*v, path);
    if (const auto* v = s.maybe("sigma")) cfg.stochastic.sigma = json_double(*v, path);
    if (const auto* v = s.maybe("inner_max_iterations")) cfg.stochastic.inner_max_iter = json_int(*v, path);
    if (const auto* v = s.maybe("final_max_iterations")) cfg.stochastic.final_max_iter = json_int(*v, path);
    if (const auto* v = s.maybe("err")) cfg.stochastic.err = json_double(*v, path);
    if (const auto* v = s.maybe("threads")) cfg.stochastic.threads = json_int(*v, path);
    s.done();
  }
  root.done();
  return cfg;
}

void write_frame_metrics(const std::vector<FrameResult>& results, const std::string& path) {
  if (results.empty()) throw std::invalid_argument("write_frame_metrics: no results");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "frame,model,rmse_mm,probability,selected,"
         "r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz\n";
  for (const FrameResult& fr : results) {
    for (std::size_t i = 0; i < fr.model_names.size(); ++i) {
      out << fr.frame << ',' << fr.model_names[i] << ',' << format_double(fr.rmse[i] * 1000.0)
          << ',' << format_double(fr.probability[i]) << ','
          << (fr.model_names[i] == fr.selected ? "true" : "false");
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out << ',' << format_double(fr.best.R(r, c));
      }
      out << ',' << format_double(fr.best.t.x()) << ',' << format_double(fr.best.t.y()) << ','
          << format_double(fr.best.t.z()) << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

void write_pose_log(const SequenceResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "{\n  \"models\": [";
  for (std::size_t i = 0; i < result.model_names.size(); ++i) {
    out << (i ? ", " : "") << '"' << result.model_names[i] << '"';
  }
  out << "],\n  \"frames\": [";
  for (std::size_t f = 0; f < result.frames.size(); ++f) {
    const FrameResult& fr = result.frames[f];
    out << (f ? ",\n    " : "\n    ") << "{\"frame\": " << fr.frame << ", \"phase\": \""
        << to_string(fr.phase) << "\", \"poses\": [";
    for (std::size_t m = 0; m < result.poses[f].size(); ++m) {
      const RigidTransform& T = result.poses[f][m];
      out << (m ? ", " : "") << "{\"r\": [";
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out << (r + c ? ", " : "") << format_double(T.R(r, c));
      }
      out << "], \"t\": [" << format_double(T.t.x()) << ", " << format_double(T.t.y()) << ", "
          << format_double(T.t.z()) << "]}";
    }
    out << "]}";
  }
  out << (result.frames.empty() ? "" : "\n  ") << "]\n}\n";
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace handpose
