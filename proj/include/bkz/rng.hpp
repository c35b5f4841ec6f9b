#pragma once

// Deterministic randomness for problem synthesis and row sampling.
//
// Generator: xoshiro256** (Blackman/Vigna), state seeded through SplitMix64.
// Substreams are derived as seed + tag * 0x9E3779B97F4A7C15 so that problem
// generation, initial points and solver sampling never share draws. Every
// variate transform is spelled out below; nothing relies on
// implementation-defined std:: distributions, so a fixed seed reproduces the
// same stream on any platform with IEEE doubles.

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "bkz/errors.hpp"

namespace bkz {

inline constexpr std::uint64_t kStreamGamma = 0x9E3779B97F4A7C15ull;

enum class StreamTag : std::uint64_t {
  Problem = 0,
  InitialPoint = 1,
  Sampling = 2,
  Estimation = 3,
};

namespace detail {

struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    detail::SplitMix64 sm(seed);
    for (auto& word : s_) word = sm.next();
  }

  static Rng for_stream(std::uint64_t seed, StreamTag tag) {
    return Rng(seed + static_cast<std::uint64_t>(tag) * kStreamGamma);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1): top 53 bits scaled by 2^-53.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log argument.
  double uniform01_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, cosine branch only; the sine half is discarded so each call
  // consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform01_open();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double exponential() { return -std::log(uniform01_open()); }

  Eigen::Index uniform_index(Eigen::Index n) {
    require(n > 0, "uniform_index: n must be positive");
    const auto i = static_cast<Eigen::Index>(uniform01() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // Uniform on the unit simplex: normalized exponential variates.
  Eigen::VectorXd simplex_uniform(Eigen::Index d) {
    require(d > 0, "simplex_uniform: d must be positive");
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = exponential();
    v /= v.sum();
    return v;
  }

  // Uniform in the Euclidean ball: normalized Gaussian direction times
  // radius * u^(1/d).
  Eigen::VectorXd ball_uniform(const Eigen::VectorXd& center, double radius) {
    require(radius >= 0.0, "ball_uniform: radius must be nonnegative");
    const Eigen::Index d = center.size();
    Eigen::VectorXd dir = normal_vector(d);
    const double norm = dir.norm();
    if (norm == 0.0) return center;
    const double scale =
        radius * std::pow(uniform01(), 1.0 / static_cast<double>(d)) / norm;
    return center + scale * dir;
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace bkz
