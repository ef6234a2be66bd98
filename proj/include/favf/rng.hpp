// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace favf {

/// SplitMix64: a counter-based 64-bit generator.
///
///   state  <- state + 0x9E3779B97F4A7C15          (mod 2^64)
///   z      <- state
///   z      <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (mod 2^64)
///   z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB  (mod 2^64)
///   output <- z ^ (z >> 31)
///
/// Uniforms take the top 53 bits: u = (output >> 11) * 2^-53, in [0, 1).
/// Normals use Box-Muller on two consecutive uniforms (u1 mapped to (0,1]),
/// consuming both and returning the cosine branch only, so a stream is
/// reproducible from the update equations above in any language.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Independent child stream, e.g. one per Monte Carlo replication.
  Rng split() { return Rng(next_u64()); }

 private:
  std::uint64_t state_;
};

}  // namespace favf
