#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace vascan {

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// splitmix64 finalizer, used to derive independent RNG streams from a base
// seed plus an index (frame number, patient id, trial id).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Explicit draw helpers so the produced value sequence is pinned to the
// engine's raw 64-bit output and not to libstdc++'s distribution internals.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) {  // inclusive range
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(g() % span);
}

inline double normal01(std::mt19937_64& g) {
  double u1 = uniform01(g);
  while (u1 <= 0.0) u1 = uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// Rayleigh with unit mean for multiplicative speckle.
inline double rayleigh_unit_mean(std::mt19937_64& g) {
  const double sigma = std::sqrt(2.0 / kPi);
  double u = uniform01(g);
  while (u <= 0.0) u = uniform01(g);
  return sigma * std::sqrt(-2.0 * std::log(u));
}

inline double smoothstep01(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * (3.0 - 2.0 * x);
}

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace vascan
