#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dataecho {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used as a stateless mixer for seed derivation and
/// counter-keyed noise, never as a stream generator.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed from a parent seed and a list of keys.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(seed);
  for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Maps 64 random bits to a double in [0, 1).
constexpr double unit_double(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Standard normal deviate by Box-Muller. Spelled out so generated data is
/// identical across standard library implementations.
inline double standard_normal(Rng& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = unit_double(rng());
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Stage-role keys for derive_seed. A stage's RNG depends on its role only, so
// moving a stage around the pipeline does not change its random stream.
namespace seed_role {
inline constexpr std::uint64_t kShuffle = 1;
inline constexpr std::uint64_t kEcho = 2;
inline constexpr std::uint64_t kAugment = 3;
inline constexpr std::uint64_t kJitter = 4;
inline constexpr std::uint64_t kInit = 5;
}  // namespace seed_role

}  // namespace dataecho
