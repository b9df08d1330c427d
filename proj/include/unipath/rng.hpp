#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace unipath {

using Rng = std::mt19937_64;

// SplitMix64 step. Used wherever draws must be reproducible bit-for-bit
// independent of the standard library (seeded model generation, stream
// derivation for workers).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform double in [0, 1) from one SplitMix64 output.
inline double splitmix_unit(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

// Independent generator for worker (a, b) under a master seed.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = seed;
  std::uint64_t mixed = splitmix64(s);
  s ^= a * 0x2545f4914f6cdd1dULL + 0x9e3779b97f4a7c15ULL;
  mixed ^= splitmix64(s);
  s ^= b * 0xda942042e4dd58b5ULL + 0x94d049bb133111ebULL;
  mixed ^= splitmix64(s);
  return Rng(mixed);
}

// Inverse-CDF draw over nonnegative weights from a single uniform u in [0,1).
// Entries <= 0 carry no mass; falls back to the last positive entry when
// rounding pushes the cursor past the end. `total` must be the caller's sum.
int sample_categorical(std::span<const double> weights, double total, double u);

// Ordered event times of a homogeneous Poisson process on [a, b):
// count ~ Poisson(rate * (b - a)), positions sorted uniforms.
std::vector<double> poisson_event_times(double rate, double a, double b, Rng& rng);

}  // namespace unipath
