#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ncvr/types.hpp"

namespace ncvr {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from (base, stream). seed_seq's
/// mixing is fully specified by the standard, so results are portable.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline Rng make_rng(std::uint64_t base, std::uint64_t stream) {
  return Rng{derive_seed(base, stream)};
}

inline Vector standard_normal_vector(Index p, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector z(p);
  for (Index j = 0; j < p; ++j) z[j] = normal(rng);
  return z;
}

/// Uniform draw from the closed ball B(center, radius).
inline Vector uniform_in_ball(const Vector& center, double radius, Rng& rng) {
  const Index p = center.size();
  Vector dir = standard_normal_vector(p, rng);
  double norm = dir.norm();
  while (norm == 0.0) {
    dir = standard_normal_vector(p, rng);
    norm = dir.norm();
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double scale = radius * std::pow(unif(rng), 1.0 / static_cast<double>(p));
  return center + (scale / norm) * dir;
}

}  // namespace ncvr
