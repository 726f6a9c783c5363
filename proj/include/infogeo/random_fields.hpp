#pragma once

// Seeded smooth random fields that vanish on the boundary collar.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "infogeo/grid.hpp"

namespace infogeo {

/// splitmix64 finalizer; derives independent stream seeds from (seed, index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct RandomFieldOptions {
  int modes = 8;          ///< sine modes per axis
  double decay = 3.0;     ///< coefficient of mode k scales like |k|^-decay
  double inset = -1.0;    ///< distance kept free from the boundary; < 0 means the collar width
};

/// Truncated double-sine series with Gaussian coefficients, supported on a
/// rectangle inset from the boundary. On the disk the series lives on the
/// square circumscribing the disk of radius R = 1 - inset and is multiplied
/// by the taper (R^2 - r^2)_+.
inline ScalarField random_field(const GridPtr& grid, std::uint64_t seed, const RandomFieldOptions& opts = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int K = opts.modes;
  std::vector<double> c(K * K);
  for (int k = 1; k <= K; ++k)
    for (int l = 1; l <= K; ++l) c[(k - 1) * K + (l - 1)] = normal(rng) * std::pow(std::hypot(k, l), -opts.decay);

  double inset = opts.inset >= 0.0 ? opts.inset : grid->collar_width();
  double lo, hi;
  if (grid->is_disk()) {
    inset = std::max(inset, grid->collar_width());
    lo = -(1.0 - inset);
    hi = 1.0 - inset;
  } else {
    lo = 1.0 + inset;
    hi = 2.0 - inset;
  }
  if (hi <= lo) throw PreconditionError("random field inset leaves no support");
  const double pi = std::numbers::pi;
  const double R = hi;

  return ScalarField::from_function(grid, [&](Point p) {
    if (p.x <= lo || p.x >= hi || p.y <= lo || p.y >= hi) return 0.0;
    double taper = 1.0;
    if (grid->is_disk()) {
      taper = R * R - (p.x * p.x + p.y * p.y);
      if (taper <= 0.0) return 0.0;
    }
    double sx = (p.x - lo) / (hi - lo), sy = (p.y - lo) / (hi - lo);
    double v = 0.0;
    for (int k = 1; k <= K; ++k) {
      double a = std::sin(k * pi * sx);
      for (int l = 1; l <= K; ++l) v += c[(k - 1) * K + (l - 1)] * a * std::sin(l * pi * sy);
    }
    return taper * v;
  });
}

}  // namespace infogeo
