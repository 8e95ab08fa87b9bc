#pragma once

#include <cmath>
#include <cstdint>

namespace catprobe::rng {

// Counter-based random number generation.
//
// Every random draw is a pure function of (seed, stream, counter), so a
// trajectory's noise path depends only on (master_seed, trajectory_id) and is
// identical no matter how trajectories are scheduled across workers.
//
// Contract (fixed per release, v1):
//   word(seed, stream, counter) chains the splitmix64 finalizer over the three
//   inputs, offset by distinct odd constants. gaussian(...) draws two words at
//   counters (2c, 2c+1) and applies the Box-Muller cosine branch.
// Outputs are bit-stable on a given platform/libm combination.

inline constexpr std::uint64_t kGolden1 = 0x9e3779b97f4a7c15ull;
inline constexpr std::uint64_t kGolden2 = 0xbf58476d1ce4e5b9ull;
inline constexpr std::uint64_t kGolden3 = 0x94d049bb133111ebull;

// splitmix64 finalizer (Steele, Lea, Flood 2014), full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * kGolden2;
  z = (z ^ (z >> 27)) * kGolden3;
  return z ^ (z >> 31);
}

constexpr std::uint64_t word(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter) {
  std::uint64_t h = mix64(seed + kGolden1);
  h = mix64(h ^ (stream + kGolden2));
  h = mix64(h ^ (counter + kGolden3));
  return h;
}

// Uniform double in [0, 1): top 53 bits of the word.
constexpr double to_unit(std::uint64_t w) {
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}

// Uniform double in (0, 1]: safe as a log() argument.
constexpr double to_unit_positive(std::uint64_t w) {
  return static_cast<double>((w >> 11) + 1) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t counter) {
  return to_unit(word(seed, stream, counter));
}

// One standard normal deviate per (seed, stream, counter).
inline double gaussian(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t counter) {
  const double u1 = to_unit_positive(word(seed, stream, 2 * counter));
  const double u2 = to_unit(word(seed, stream, 2 * counter + 1));
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace catprobe::rng
