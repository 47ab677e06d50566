#include "handpose/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace handpose {

double Rng::uniform01() {
  // 53 random mantissa bits.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * uniform01(); }

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Rejection sampling over a power-of-two envelope, no modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
  std::uint64_t x = engine_();
  while (x > limit) x = engine_();
  return static_cast<std::size_t>(x % n);
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  spare_ = mag * std::sin(ang);
  has_spare_ = true;
  return mag * std::cos(ang);
}

Vec3 Rng::gaussian_vec3(double sigma) {
  return Vec3(sigma * gaussian(), sigma * gaussian(), sigma * gaussian());
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Mat3 random_rotation(Rng& rng) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double theta = two_pi * rng.uniform01();
  const double phi = two_pi * rng.uniform01();
  const double z = rng.uniform01();

  Mat3 rz;
  rz << std::cos(theta), std::sin(theta), 0,
        -std::sin(theta), std::cos(theta), 0,
        0, 0, 1;

  const double r = std::sqrt(z);
  const Vec3 v(std::cos(phi) * r, std::sin(phi) * r, std::sqrt(1.0 - z));
  const Mat3 householder = Mat3::Identity() - 2.0 * v * v.transpose();
  return -(householder * rz);
}

}  // namespace handpose
