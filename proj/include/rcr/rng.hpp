/*!
 * This file is part of rcrdesign, a library for optimal group-size allocation
 * in two-treatment-group random coefficient regression models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE in the project root.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rcr {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Independent generator for one replicate: the engine state is derived from
/// (seed, stream) by splitmix64 mixing, so replicates form decorrelated
/// streams that can run on any thread in any order with identical results.
inline std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t mix = seed ^ (0xd1342543de82ef95ULL * (stream + 1));
  std::mt19937_64 engine(detail::splitmix64(mix));
  engine.discard(8);  // move past the low-entropy warmup states
  return engine;
}

/// Standard normal draw via Box-Muller on explicit uniforms. Bit-identical
/// across standard library implementations, unlike std::normal_distribution.
inline double standard_normal(std::mt19937_64& engine) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  constexpr double norm = 1.0 / 9007199254740992.0;  // 2^-53
  // u1 in (0, 1]: keep log finite
  const double u1 = (static_cast<double>(engine() >> 11) + 1.0) * norm;
  const double u2 = static_cast<double>(engine() >> 11) * norm;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace rcr
