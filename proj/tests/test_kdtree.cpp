#include "handpose/kdtree.hpp"
#include "handpose/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <limits>

using namespace handpose;

namespace {

PointCloud random_cloud(Rng& rng, std::size_t n, double extent = 1.0) {
  PointCloud cloud;
  for (std::size_t i = 0; i < n; ++i) {
    cloud.push_back(Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                         rng.uniform(-extent, extent)));
  }
  return cloud;
}

// Linear-scan oracles, using the same distance expression as the index.
std::pair<std::size_t, double> brute_nearest(const PointCloud& cloud, const Vec3& q) {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double d2 = (cloud[i] - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return {best, std::sqrt(best_d2)};
}

std::vector<std::size_t> brute_radius(const PointCloud& cloud, const Vec3& q, double r) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if ((cloud[i] - q).squaredNorm() <= r * r) out.push_back(i);
  }
  return out;
}

}  // namespace

TEST_CASE("empty cloud is rejected") {
  CHECK_THROWS_AS(NNIndex(PointCloud{}), std::invalid_argument);
}

TEST_CASE("self queries return distance zero") {
  Rng rng(3);
  const PointCloud cloud = random_cloud(rng, 300);
  NNIndex index(cloud);
  for (std::size_t i = 0; i < cloud.size(); i += 17) {
    const auto hit = index.nearest(cloud[i]);
    CHECK(hit.distance == 0.0);
    CHECK(cloud[hit.index] == cloud[i]);
  }
}

TEST_CASE("nearest matches linear scan on random clouds") {
  Rng rng(21);
  const PointCloud cloud = random_cloud(rng, 1000);
  NNIndex index(cloud);
  for (int rep = 0; rep < 100; ++rep) {
    const Vec3 q(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
    const auto hit = index.nearest(q);
    const auto [bi, bd] = brute_nearest(cloud, q);
    CHECK(hit.index == bi);
    CHECK(hit.distance == bd);
  }
}

TEST_CASE("equidistant ties resolve to the smallest index") {
  PointCloud cloud{Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0)};
  NNIndex index(cloud);
  CHECK(index.nearest(Vec3(0, 0, 0)).index == 0);

  // Duplicate points: the lower index wins.
  PointCloud dupes{Vec3(0.5, 0.5, 0.5), Vec3(0.5, 0.5, 0.5), Vec3(2, 2, 2)};
  NNIndex d(dupes);
  CHECK(d.nearest(Vec3(0.5, 0.5, 0.4)).index == 0);
}

TEST_CASE("radius search equals brute force and is sorted") {
  Rng rng(77);
  const PointCloud cloud = random_cloud(rng, 500);
  NNIndex index(cloud);
  for (int rep = 0; rep < 60; ++rep) {
    const Vec3 q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double r = rng.uniform(0.05, 0.8);
    const auto got = index.radius_search(q, r);
    CHECK(std::is_sorted(got.begin(), got.end()));
    CHECK(got == brute_radius(cloud, q, r));
  }
}

TEST_CASE("radius search corner cases") {
  Rng rng(9);
  const PointCloud cloud = random_cloud(rng, 64);
  NNIndex index(cloud);

  // Huge radius returns everything.
  const auto all = index.radius_search(Vec3::Zero(), 1e9);
  CHECK(all.size() == cloud.size());

  // Radius below the minimum pairwise gap, centered on a point: that point only.
  PointCloud grid;
  for (int i = 0; i < 4; ++i) grid.push_back(Vec3(i, 0, 0));
  NNIndex gi(grid);
  const auto only = gi.radius_search(Vec3(2, 0, 0), 0.5);
  CHECK(only == std::vector<std::size_t>{2});

  // Everything out of reach.
  CHECK(gi.radius_search(Vec3(100, 100, 100), 1.0).empty());

  CHECK_THROWS_AS(index.radius_search(Vec3::Zero(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(index.radius_search(Vec3::Zero(), -1.0), std::invalid_argument);
}

TEST_CASE("queries are exact on degenerate layouts") {
  // All points on a line, with duplicates: exercises zero-extent split axes.
  PointCloud line;
  for (int i = 0; i < 200; ++i) line.push_back(Vec3(i % 50, 0, 0));
  NNIndex index(line);
  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const Vec3 q(rng.uniform(-5, 55), rng.uniform(-1, 1), 0);
    const auto hit = index.nearest(q);
    const auto [bi, bd] = brute_nearest(line, q);
    CHECK(hit.index == bi);
    CHECK(hit.distance == bd);
    const double r = rng.uniform(0.1, 3.0);
    CHECK(index.radius_search(q, r) == brute_radius(line, q, r));
  }
}

TEST_CASE("exhaustive agreement on clouds up to 2000 points") {
  Rng rng(31415);
  for (std::size_t n : {1ul, 2ul, 17ul, 333ul, 2000ul}) {
    const PointCloud cloud = random_cloud(rng, n);
    NNIndex index(cloud);
    for (int rep = 0; rep < 20; ++rep) {
      const Vec3 q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      const auto hit = index.nearest(q);
      const auto [bi, bd] = brute_nearest(cloud, q);
      CHECK(hit.index == bi);
      CHECK(hit.distance == bd);
      const double r = rng.uniform(0.01, 1.5);
      CHECK(index.radius_search(q, r) == brute_radius(cloud, q, r));
    }
  }
}
