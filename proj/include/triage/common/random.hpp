#pragma once

#include <cstdint>
#include <random>

namespace triage {

// Distribution helpers with a fixed algorithm, so seeded runs reproduce
// across standard libraries (std::*_distribution output is unspecified).
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform in [0, n) by rejection; n must be > 0.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do v = rng(); while (v >= limit);
  return v % n;
}

}  // namespace triage
