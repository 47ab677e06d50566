#include "handpose/clustering.hpp"

#include "handpose/kdtree.hpp"
#include "handpose/random.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace handpose {

namespace {
constexpr int kNoise = -1;
constexpr int kUndefined = -2;
}  // namespace

ClusterLabeling dbscan(const PointCloud& cloud, const DbscanConfig& cfg) {
  if (!(cfg.eps > 0.0)) throw std::invalid_argument("dbscan: eps must be positive");
  if (cfg.min_pts < 1) throw std::invalid_argument("dbscan: min_pts must be >= 1");
  if (cloud.empty()) throw std::invalid_argument("dbscan: empty cloud");

  const std::size_t n = cloud.size();
  NNIndex index(cloud);
  ClusterLabeling out;
  out.labels.assign(n, kUndefined);

  int cid = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] != kUndefined) continue;
    const auto neighbors = index.radius_search(cloud[i], cfg.eps);  // includes i itself
    if (neighbors.size() < static_cast<std::size_t>(cfg.min_pts)) {
      out.labels[i] = kNoise;
      continue;
    }
    out.labels[i] = cid;
    std::deque<std::size_t> seeds(neighbors.begin(), neighbors.end());
    while (!seeds.empty()) {
      const std::size_t j = seeds.front();
      seeds.pop_front();
      if (out.labels[j] == kNoise) {
        out.labels[j] = cid;  // border point, renamed from noise
        continue;
      }
      if (out.labels[j] != kUndefined) continue;
      out.labels[j] = cid;
      const auto nj = index.radius_search(cloud[j], cfg.eps);
      if (nj.size() >= static_cast<std::size_t>(cfg.min_pts)) {
        seeds.insert(seeds.end(), nj.begin(), nj.end());
      }
    }
    ++cid;
  }
  out.cluster_count = cid;
  return out;
}

ClusterLabeling euclidean_cluster_extraction(const PointCloud& cloud, double radius, int min_size) {
  if (!(radius > 0.0)) throw std::invalid_argument("euclidean_cluster_extraction: radius must be positive");
  if (min_size < 1) throw std::invalid_argument("euclidean_cluster_extraction: min_size must be >= 1");
  if (cloud.empty()) throw std::invalid_argument("euclidean_cluster_extraction: empty cloud");

  const std::size_t n = cloud.size();
  NNIndex index(cloud);
  std::vector<int> component(n, kUndefined);
  std::vector<std::size_t> component_size;

  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (component[i] != kUndefined) continue;
    std::size_t count = 0;
    std::deque<std::size_t> queue{i};
    component[i] = next;
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      ++count;
      for (std::size_t k : index.radius_search(cloud[j], radius)) {
        if (component[k] == kUndefined) {
          component[k] = next;
          queue.push_back(k);
        }
      }
    }
    component_size.push_back(count);
    ++next;
  }

  // Drop undersized components, then compact ids in discovery order.
  std::vector<int> remap(component_size.size(), kNoise);
  int cid = 0;
  for (std::size_t c = 0; c < component_size.size(); ++c) {
    if (component_size[c] >= static_cast<std::size_t>(min_size)) remap[c] = cid++;
  }
  ClusterLabeling out;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = remap[component[i]];
  out.cluster_count = cid;
  return out;
}

ClusterLabeling kmeans(const PointCloud& cloud, int k, std::uint64_t seed, int max_iters,
                       KmeansTrace* trace) {
  const std::size_t n = cloud.size();
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > n) throw std::invalid_argument("kmeans: k exceeds point count");
  if (max_iters < 1) throw std::invalid_argument("kmeans: max_iters must be >= 1");

  // Forgy start: k distinct indices via partial Fisher-Yates.
  Rng rng(seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<Vec3> centers(k);
  for (int c = 0; c < k; ++c) {
    const std::size_t j = c + rng.uniform_index(n - c);
    std::swap(perm[c], perm[j]);
    centers[c] = cloud[perm[c]];
  }

  std::vector<int> labels(n, 0);
  if (trace) trace->wcss.clear();
  double prev_wcss = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d2 = (cloud[i] - centers[0]).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d2 = (cloud[i] - centers[c]).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
    }

    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[labels[i]];

    // Reseed empty clusters at the point farthest from its assigned centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t worst = n;
      double worst_d2 = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[labels[i]] <= 1) continue;  // keep donor clusters nonempty
        const double d2 = (cloud[i] - centers[labels[i]]).squaredNorm();
        if (d2 > worst_d2) {
          worst_d2 = d2;
          worst = i;
        }
      }
      assert(worst < n);
      --counts[labels[worst]];
      labels[worst] = c;
      counts[c] = 1;
      centers[c] = cloud[worst];
      changed = true;
    }

    for (int c = 0; c < k; ++c) centers[c] = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) centers[labels[i]] += cloud[i];
    for (int c = 0; c < k; ++c) centers[c] /= static_cast<double>(counts[c]);

    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) wcss += (cloud[i] - centers[labels[i]]).squaredNorm();
    assert(wcss <= prev_wcss * (1.0 + 1e-12) + 1e-18);
    if (trace) trace->wcss.push_back(wcss);
    prev_wcss = wcss;

    if (!changed) break;
  }

  ClusterLabeling out;
  out.labels = std::move(labels);
  out.cluster_count = k;
  return out;
}

std::vector<PointCloud> extract_clusters(const PointCloud& cloud, const ClusterLabeling& labeling) {
  if (labeling.labels.size() != cloud.size()) {
    throw std::invalid_argument("extract_clusters: labeling length mismatch");
  }
  std::vector<PointCloud> out(labeling.cluster_count);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int l = labeling.labels[i];
    if (l < 0) continue;
    if (l >= labeling.cluster_count) throw std::invalid_argument("extract_clusters: label out of range");
    out[l].push_back(cloud[i]);
  }
  return out;
}

}  // namespace handpose
