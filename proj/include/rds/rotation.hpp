#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rds/model.hpp"
#include "rds/transfer.hpp"

namespace rds {

struct RotationMC {
  double rho = 0.0;
  /// From 32 batch means of the per-step displacement.
  double std_error = 0.0;
  std::size_t n = 0;
};

/// (F^n(x0) - x0) / n along one lifted orbit.
RotationMC rotation_mc(const RandomMap1D& map, double x0, std::size_t n, std::uint64_t seed);

struct RotationSpectral {
  /// Integral of the mean one-step displacement against the stationary density.
  double rho = 0.0;
  /// Mean midpoint-to-midpoint lift displacement of the Ulam chain; exactly
  /// rational when the recurrent class does not wind around the circle.
  double rho_chain = 0.0;
  /// Recurrent class of the Ulam chain misses part of the circle.
  bool locked = false;
};

RotationSpectral rotation_spectral(const RandomMap1D& map, const Grid& grid);

/// Same, reusing a matrix from build_ulam and its stationary density.
RotationSpectral rotation_spectral(const RandomMap1D& map, const UlamMatrix& m, const std::vector<double>& density);

/// E delta(x) = E_w[f(x; w)] - x.
double mean_displacement(const RandomMap1D& map, double x);

struct RotationEstimate {
  double a = 0.0;
  double rho_mc = 0.0;
  double rho_spectral = 0.0;
  double rho_chain = 0.0;
  double mc_std_error = 0.0;
  std::size_t n_iter = 0;
  double discrepancy = 0.0;
  bool locked = false;
};

RotationEstimate rotation_estimate(const RandomMap1D& map, const Grid& grid, double x0, std::size_t n,
                                   std::uint64_t seed);

}  // namespace rds
