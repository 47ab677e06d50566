// Command-line front end over the handpose C API. Exit codes: 0 success,
// 1 usage error (nothing written), 2 runtime failure (partial outputs
// removed).

#include "handpose.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CloudDeleter {
  void operator()(hp_cloud* c) const { hp_cloud_free(c); }
};
using CloudPtr = std::unique_ptr<hp_cloud, CloudDeleter>;

// Declared output files, removed unless the command completes.
struct OutputGuard {
  std::vector<std::string> paths;
  bool keep = false;

  void declare(const std::string& p) { paths.push_back(p); }
  ~OutputGuard() {
    if (keep) return;
    for (const std::string& p : paths) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
};

int runtime_failure(const std::string& context) {
  std::cerr << "error: " << context << ": " << hp_last_error() << '\n';
  return 2;
}

bool parse_viewpoint(const std::string& text, double out[3]) {
  return std::sscanf(text.c_str(), "%lf,%lf,%lf", &out[0], &out[1], &out[2]) == 3;
}

// A directory argument expands to the cloud files inside it; the final list
// is always consumed in lexicographic order.
std::vector<std::string> collect_frames(const std::vector<std::string>& args) {
  std::vector<std::string> frames;
  for (const std::string& a : args) {
    if (fs::is_directory(a)) {
      for (const auto& entry : fs::directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".xyz" || ext == ".ply" || ext == ".txt") {
          frames.push_back(entry.path().string());
        }
      }
    } else {
      frames.push_back(a);
    }
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

std::string resolve_pose(const std::string& pose, const std::string& config_dir) {
  if (fs::exists(pose)) return pose;
  for (const char* sub : {"poses", "objects", "interactions"}) {
    const fs::path candidate = fs::path(config_dir) / sub / (pose + ".json");
    if (fs::exists(candidate)) return candidate.string();
  }
  return pose;  // let the library report the missing file
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3-D hand pose estimation from xyz point clouds: background removal, "
               "clustering, synthetic prototypes and stochastic ICP matching"};
  app.require_subcommand(1);

  // segment-plane
  auto* seg = app.add_subcommand("segment-plane", "Fit the background plane with RANSAC and remove it");
  std::string seg_input, seg_output, seg_plane_out;
  double seg_tau = 0.1;
  int seg_max_iters = 1000;
  long long seg_min_consensus = -1;
  std::uint64_t seg_seed = 0;
  seg->add_option("--input", seg_input, "Input cloud file")->required();
  seg->add_option("--tau", seg_tau, "Inlier distance threshold, meters")
      ->check(CLI::PositiveNumber)->capture_default_str();
  seg->add_option("--max-iters", seg_max_iters, "RANSAC iterations")
      ->check(CLI::PositiveNumber)->capture_default_str();
  seg->add_option("--min-consensus", seg_min_consensus, "Minimum consensus size (default: half the cloud)");
  seg->add_option("--seed", seg_seed, "Random seed")->capture_default_str();
  seg->add_option("--output", seg_output, "Foreground cloud file")->required();
  seg->add_option("--plane-out", seg_plane_out, "Plane parameter file");

  // cluster
  auto* clu = app.add_subcommand("cluster", "Partition a cloud into clusters");
  std::string clu_input, clu_algo = "dbscan", clu_prefix;
  double clu_eps = 0.02, clu_radius = 0.02;
  int clu_min_pts = 10, clu_min_size = 1, clu_k = 2, clu_max_iters = 100;
  std::uint64_t clu_seed = 0;
  clu->add_option("--input", clu_input, "Input cloud file")->required();
  clu->add_option("--algo", clu_algo, "Clustering algorithm")
      ->check(CLI::IsMember({"dbscan", "ece", "kmeans"}))->capture_default_str();
  clu->add_option("--eps", clu_eps, "DBSCAN neighborhood radius, meters")
      ->check(CLI::PositiveNumber)->capture_default_str();
  clu->add_option("--min-pts", clu_min_pts, "DBSCAN core-point threshold")
      ->check(CLI::PositiveNumber)->capture_default_str();
  clu->add_option("--radius", clu_radius, "ECE adjacency radius, meters")
      ->check(CLI::PositiveNumber)->capture_default_str();
  clu->add_option("--min-size", clu_min_size, "ECE minimum cluster size")
      ->check(CLI::PositiveNumber)->capture_default_str();
  clu->add_option("--k", clu_k, "K-means cluster count")->check(CLI::PositiveNumber)
      ->capture_default_str();
  clu->add_option("--max-iters", clu_max_iters, "K-means iteration cap")
      ->check(CLI::PositiveNumber)->capture_default_str();
  clu->add_option("--seed", clu_seed, "Random seed")->capture_default_str();
  clu->add_option("--output-prefix", clu_prefix, "Prefix for cluster cloud and label files")
      ->required();

  // gen-model
  auto* gen = app.add_subcommand("gen-model", "Generate a synthetic prototype cloud");
  std::string gen_pose, gen_skeleton, gen_config_dir = "configs", gen_viewpoint = "0,0,1.8",
              gen_output;
  double gen_density = 400000.0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--pose", gen_pose, "Model spec file or built-in name")->required();
  gen->add_option("--skeleton", gen_skeleton, "Skeleton config (default: <config-dir>/hand_skeleton.json)");
  gen->add_option("--config-dir", gen_config_dir, "Directory with shipped pose/skeleton configs")
      ->capture_default_str();
  gen->add_option("--viewpoint", gen_viewpoint, "Viewpoint x,y,z in meters")->capture_default_str();
  gen->add_option("--density", gen_density, "Surface sampling density, points per square meter")
      ->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--output", gen_output, "Output cloud file")->required();

  // gen-scene
  auto* scn = app.add_subcommand("gen-scene", "Render a synthetic scene spec to a cloud");
  std::string scn_spec, scn_output, scn_truth;
  std::uint64_t scn_seed = 0;
  scn->add_option("--spec", scn_spec, "Scene spec file")->required();
  scn->add_option("--output", scn_output, "Output cloud file")->required();
  scn->add_option("--truth", scn_truth, "Ground-truth file")->required();
  auto* scn_seed_opt = scn->add_option("--seed", scn_seed, "Override the spec's seed");

  // register
  auto* reg = app.add_subcommand("register", "Align a model cloud to a data cloud");
  std::string reg_model, reg_data, reg_mode = "standard", reg_out_transform, reg_out_cloud;
  int reg_max_iter = 30, reg_trials = 50, reg_inner = 10;
  double reg_err = 1e-5, reg_sigma = 0.1;
  std::uint64_t reg_seed = 0;
  reg->add_option("--model", reg_model, "Model cloud file")->required();
  reg->add_option("--data", reg_data, "Data cloud file")->required();
  reg->add_option("--mode", reg_mode, "Registration mode")
      ->check(CLI::IsMember({"standard", "stochastic"}))->capture_default_str();
  reg->add_option("--max-iter", reg_max_iter, "Iteration cap (final pass in stochastic mode)")
      ->check(CLI::PositiveNumber)->capture_default_str();
  reg->add_option("--err", reg_err, "Relative error-change stopping threshold")
      ->check(CLI::PositiveNumber)->capture_default_str();
  reg->add_option("--trials", reg_trials, "Stochastic trial count")
      ->check(CLI::PositiveNumber)->capture_default_str();
  reg->add_option("--sigma", reg_sigma, "Stochastic perturbation scale, meters")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  reg->add_option("--inner-max-iter", reg_inner, "Per-trial iteration cap")
      ->check(CLI::PositiveNumber)->capture_default_str();
  reg->add_option("--seed", reg_seed, "Random seed")->capture_default_str();
  reg->add_option("--out-transform", reg_out_transform, "Transform output file");
  reg->add_option("--out-cloud", reg_out_cloud, "Aligned cloud output file");

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline over a frame sequence");
  std::string run_config, run_metrics, run_poses;
  std::vector<std::string> run_frames;
  std::uint64_t run_seed = 0;
  run->add_option("--config", run_config, "Pipeline config file")->required();
  run->add_option("--frames", run_frames, "Frame files or a directory of frames")
      ->required()->expected(-1);
  run->add_option("--metrics", run_metrics, "Metrics CSV output")->required();
  run->add_option("--poses", run_poses, "Per-frame pose log output")->required();
  auto* run_seed_opt = run->add_option("--seed", run_seed, "Override the config's seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the offending flag to stderr
    return 1;
  }

  if (app.got_subcommand(seg)) {
    OutputGuard guard;
    guard.declare(seg_output);
    if (!seg_plane_out.empty()) guard.declare(seg_plane_out);

    hp_cloud* raw = nullptr;
    if (hp_cloud_read(seg_input.c_str(), &raw)) return runtime_failure("segment-plane");
    CloudPtr input(raw);
    hp_cloud* fg_raw = nullptr;
    hp_plane plane{};
    if (hp_segment_plane(input.get(), seg_tau, seg_max_iters, seg_min_consensus, seg_seed,
                         &fg_raw, &plane)) {
      return runtime_failure("segment-plane");
    }
    CloudPtr foreground(fg_raw);
    if (hp_cloud_write(foreground.get(), seg_output.c_str())) return runtime_failure("segment-plane");
    if (!seg_plane_out.empty() && hp_plane_write(&plane, seg_plane_out.c_str())) {
      return runtime_failure("segment-plane");
    }
    std::cout << "foreground points: " << hp_cloud_size(foreground.get()) << " of "
              << hp_cloud_size(input.get()) << '\n';
    guard.keep = true;
    return 0;
  }

  if (app.got_subcommand(clu)) {
    OutputGuard guard;
    hp_cloud* raw = nullptr;
    if (hp_cloud_read(clu_input.c_str(), &raw)) return runtime_failure("cluster");
    CloudPtr input(raw);
    const size_t n = hp_cloud_size(input.get());

    hp_cluster_params params{};
    params.algo = clu_algo == "dbscan" ? HP_CLUSTER_DBSCAN
                : clu_algo == "ece" ? HP_CLUSTER_ECE : HP_CLUSTER_KMEANS;
    params.eps = clu_eps;
    params.min_pts = clu_min_pts;
    params.radius = clu_radius;
    params.min_size = clu_min_size;
    params.k = clu_k;
    params.max_iterations = clu_max_iters;
    params.seed = clu_seed;

    std::vector<int32_t> labels(n);
    int32_t cluster_count = 0;
    if (hp_cluster(input.get(), &params, labels.data(), &cluster_count)) {
      return runtime_failure("cluster");
    }
    std::vector<double> xyz(3 * n);
    if (hp_cloud_copy_points(input.get(), xyz.data())) return runtime_failure("cluster");

    for (int32_t c = 0; c < cluster_count; ++c) {
      std::vector<double> member;
      for (size_t i = 0; i < n; ++i) {
        if (labels[i] == c) {
          member.insert(member.end(), {xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]});
        }
      }
      hp_cloud* cluster_raw = nullptr;
      if (hp_cloud_create(member.data(), member.size() / 3, &cluster_raw)) {
        return runtime_failure("cluster");
      }
      CloudPtr cluster(cluster_raw);
      const std::string path = clu_prefix + "cluster_" + std::to_string(c) + ".xyz";
      guard.declare(path);
      if (hp_cloud_write(cluster.get(), path.c_str())) return runtime_failure("cluster");
    }

    const std::string labels_path = clu_prefix + "labels.txt";
    guard.declare(labels_path);
    std::ofstream labels_out(labels_path);
    for (int32_t l : labels) labels_out << l << '\n';
    if (!labels_out) {
      std::cerr << "error: cluster: cannot write " << labels_path << '\n';
      return 2;
    }
    std::cout << "clusters: " << cluster_count << '\n';
    guard.keep = true;
    return 0;
  }

  if (app.got_subcommand(gen)) {
    double viewpoint[3];
    if (!parse_viewpoint(gen_viewpoint, viewpoint)) {
      std::cerr << "error: --viewpoint expects x,y,z\n";
      return 1;
    }
    OutputGuard guard;
    guard.declare(gen_output);
    const std::string skeleton = gen_skeleton.empty()
        ? (fs::path(gen_config_dir) / "hand_skeleton.json").string() : gen_skeleton;
    const std::string pose = resolve_pose(gen_pose, gen_config_dir);
    hp_cloud* raw = nullptr;
    if (hp_generate_model(skeleton.c_str(), pose.c_str(), viewpoint[0], viewpoint[1], viewpoint[2],
                          gen_density, gen_seed, &raw)) {
      return runtime_failure("gen-model");
    }
    CloudPtr cloud(raw);
    if (hp_cloud_write(cloud.get(), gen_output.c_str())) return runtime_failure("gen-model");
    std::cout << "points: " << hp_cloud_size(cloud.get()) << '\n';
    guard.keep = true;
    return 0;
  }

  if (app.got_subcommand(scn)) {
    OutputGuard guard;
    guard.declare(scn_output);
    guard.declare(scn_truth);
    if (hp_generate_scene(scn_spec.c_str(), scn_seed, scn_seed_opt->count() > 0 ? 1 : 0,
                          scn_output.c_str(), scn_truth.c_str())) {
      return runtime_failure("gen-scene");
    }
    guard.keep = true;
    return 0;
  }

  if (app.got_subcommand(reg)) {
    OutputGuard guard;
    if (!reg_out_transform.empty()) guard.declare(reg_out_transform);
    if (!reg_out_cloud.empty()) guard.declare(reg_out_cloud);

    hp_cloud *model_raw = nullptr, *data_raw = nullptr;
    if (hp_cloud_read(reg_model.c_str(), &model_raw)) return runtime_failure("register");
    CloudPtr model(model_raw);
    if (hp_cloud_read(reg_data.c_str(), &data_raw)) return runtime_failure("register");
    CloudPtr data(data_raw);

    hp_register_params params{};
    params.mode = reg_mode == "standard" ? HP_REGISTER_STANDARD : HP_REGISTER_STOCHASTIC;
    params.max_iterations = reg_max_iter;
    params.err = reg_err;
    params.trials = reg_trials;
    params.sigma = reg_sigma;
    params.inner_max_iterations = reg_inner;
    params.seed = reg_seed;

    hp_register_result result{};
    hp_cloud* aligned_raw = nullptr;
    if (hp_register_clouds(model.get(), data.get(), &params, &result,
                           reg_out_cloud.empty() ? nullptr : &aligned_raw)) {
      return runtime_failure("register");
    }
    CloudPtr aligned(aligned_raw);
    if (!reg_out_transform.empty() &&
        hp_transform_write(&result.transform, reg_out_transform.c_str())) {
      return runtime_failure("register");
    }
    if (!reg_out_cloud.empty() && hp_cloud_write(aligned.get(), reg_out_cloud.c_str())) {
      return runtime_failure("register");
    }
    std::cout << "rmse_m: " << result.rmse;
    if (params.mode == HP_REGISTER_STANDARD) std::cout << " iterations: " << result.iterations;
    std::cout << '\n';
    guard.keep = true;
    return 0;
  }

  if (app.got_subcommand(run)) {
    OutputGuard guard;
    guard.declare(run_metrics);
    guard.declare(run_poses);

    const std::vector<std::string> frames = collect_frames(run_frames);
    std::vector<const char*> frame_ptrs;
    frame_ptrs.reserve(frames.size());
    for (const std::string& f : frames) frame_ptrs.push_back(f.c_str());

    size_t ok = 0, failed = 0;
    if (hp_run_sequence(run_config.c_str(), frame_ptrs.data(), frame_ptrs.size(), run_seed,
                        run_seed_opt->count() > 0 ? 1 : 0, run_metrics.c_str(), run_poses.c_str(),
                        &ok, &failed)) {
      return runtime_failure("run");
    }
    std::cout << "frames processed: " << ok << ", skipped: " << failed << '\n';
    guard.keep = true;
    return 0;
  }

  return 1;
}
