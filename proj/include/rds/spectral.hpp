#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "rds/model.hpp"
#include "rds/transfer.hpp"

namespace rds {

using cplx = std::complex<double>;

struct SpectralSet {
  /// Sorted by modulus (descending), ties by phase in [0, 2pi).
  std::vector<cplx> eigenvalues;
  /// Left eigenvectors v (v^T M = lambda v^T), unit 2-norm, largest entry real positive.
  std::vector<std::vector<cplx>> eigenvectors;
  std::vector<double> residuals;
  std::size_t unit_multiplicity = 0;
  /// Indices into eigenvalues with modulus >= 1 - tol_unit.
  std::vector<std::size_t> peripheral;
  double eta = 0.0;
  double tol = 0.0;
  double tol_unit = 1e-6;
  double cell_width = 1.0;
  bool windowed = false;
  std::size_t matvecs = 0;
  std::vector<std::string> notes;
};

/// Phase in [0, 2pi).
double phase(cplx z);

/// k leading eigenpairs of M acting on densities from the left. k grows
/// automatically until some eigenvalue lies below the peripheral group, so
/// that eta is always defined (unless k reaches the matrix size).
SpectralSet eigen(const UlamMatrix& m, std::size_t k = 8, double tol = 1e-10, double tol_unit = 1e-6);

/// Ergodic stationary densities, one per unit eigenvalue, ordered by the
/// position of their leftmost support cell. Unit integral over the grid.
std::vector<std::vector<double>> stationary_densities(const SpectralSet& s);

struct CycleInfo {
  std::size_t period = 1;
  /// levels[r] lists the support components visited at step r (mod period).
  std::vector<std::vector<std::size_t>> levels;
};

/// Cycle structure of each ergodic density over its own support components.
/// supports[k] are the components of densities[k] (cell aligned).
std::vector<CycleInfo> cyclic_structure(const SpectralSet& s, const UlamMatrix& m,
                                        const std::vector<std::vector<double>>& densities,
                                        const std::vector<std::vector<Interval>>& supports);

double decay_rate(const SpectralSet& s);

}  // namespace rds
