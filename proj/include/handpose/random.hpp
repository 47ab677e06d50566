#pragma once

#include "handpose/geometry.hpp"

#include <cstdint>
#include <random>

namespace handpose {

/// Seeded generator with hand-rolled distributions. std::mt19937_64 is fully
/// specified by the standard; the std::*_distribution adapters are not, so
/// everything here is implemented directly to keep identical seeds producing
/// identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01();

  /// Uniform in [a, b).
  double uniform(double a, double b);

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  /// Standard normal (Box-Muller, cached spare).
  double gaussian();

  Vec3 gaussian_vec3(double sigma);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Decorrelated child seed for stream `stream` of a master seed. Used to make
/// parallel trials independent of execution order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Uniform random rotation by Arvo's construction: a random rotation about
/// the vertical axis followed by a Householder reflection through a random
/// vector, negated to restore det +1.
Mat3 random_rotation(Rng& rng);

}  // namespace handpose
