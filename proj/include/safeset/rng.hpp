#pragma once

#include <cstdint>
#include <random>

namespace safeset {

using Rng = std::mt19937_64;

// Unbiased draw from [0, n) via rejection. Hand-rolled instead of
// std::uniform_int_distribution so draw sequences are identical across
// standard-library implementations (reproducibility is part of the contract).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n <= 1) {
    if (n == 1) return 0;
    throw std::logic_error("uniform_index: empty range");
  }
  const std::uint64_t span = n;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % span);
}

// Uniform double in [lo, hi) with 53-bit resolution; same portability rationale.
inline double uniform_real(Rng& rng, double lo, double hi) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

}  // namespace safeset
