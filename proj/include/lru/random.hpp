#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lru {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; decorrelates consecutive seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of trajectory `index` in an ensemble seeded by `master`.
inline std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform on (0, 1].
inline double uniform01_open_low(Rng& rng) { return 1.0 - uniform01(rng); }

/// Exponential variate of the given rate.
inline double exponential(Rng& rng, double rate) { return -std::log(uniform01_open_low(rng)) / rate; }

}  // namespace lru
