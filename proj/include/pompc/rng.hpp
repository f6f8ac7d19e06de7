// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace pompc {

/// Seedable random source. Every stochastic operation in the library draws
/// from an explicit Rng so runs are reproducible from (config, seed).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  // A fresh distribution per draw keeps all state inside the engine, which
  // is what the checkpoint serializes.
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
  }

  /// Independent stream keyed by (seed, a, b); used for per-trajectory noise
  /// so serial and parallel rollouts see identical numbers.
  static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = mix(seed ^ 0x9e3779b97f4a7c15ULL);
    h = mix(h ^ (a + 0x632be59bd9b4e019ULL));
    h = mix(h ^ (b + 0x85157af5d1e2c2ebULL));
    return Rng(h);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace pompc
