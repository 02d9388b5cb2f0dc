#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rds/model.hpp"
#include "rds/transfer.hpp"

namespace rds {

struct EscapeReport {
  /// Window after outward snapping to grid cells.
  std::vector<Interval> window;
  std::vector<std::size_t> cells;
  double cell_width = 0.0;
  double alpha = 0.0;
  /// Over `cells`, unit integral.
  std::vector<double> qs_density;
  /// 1 / (1 - alpha); +inf when alpha = 1 within 1e-12.
  double expected_escape_spectral = 0.0;
  /// Largest windowed eigenvalue modulus strictly below alpha (the
  /// alpha * root-of-unity group of a cyclic window is skipped).
  double subdominant = 0.0;
  bool absorbing = false;
  bool subdominant_close = false;
  /// 1 - alpha from the leak identity sum(phi * leak) / sum(phi), with phi
  /// from a positivity-preserving power iteration. Stays accurate when alpha
  /// rounds to 1.
  double leak_rate = 0.0;
  /// 1 / leak_rate; +inf when some cells cannot reach a leaking cell.
  double expected_escape_leak = 0.0;
  /// Some cell class of the windowed chain never leaks (alpha = 1 exactly).
  bool closed_class = false;
  bool leak_converged = false;
  std::optional<double> mc_mean;
  std::optional<double> mc_std_error;
  std::vector<std::string> notes;
};

/// Perron eigenpair of 1_W L on the grid.
EscapeReport quasi_stationary(const RandomMap1D& map, const std::vector<Interval>& window, const Grid& grid,
                              std::size_t quadrature_order = 5);

enum class EscapeStart { Uniform, QuasiStationary };

struct EscapeSample {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  std::size_t censored = 0;
  /// More than 1% of trials hit max_steps.
  bool censoring_flag = false;
  /// survival[k] = fraction of trials with chi > k, k = 0..20 (censored trials survive).
  std::vector<double> survival;
};

/// Escape time chi = first k >= 1 with f^k(x) outside W. Uniform starts are
/// drawn uniformly over the window's length; QS starts need `qs`.
EscapeSample escape_time_mc(const RandomMap1D& map, const std::vector<Interval>& window, std::size_t n_trials,
                            std::size_t max_steps, std::uint64_t seed, EscapeStart start = EscapeStart::Uniform,
                            const EscapeReport* qs = nullptr);

struct GrowthRow {
  double offset = 0.0;
  double a = 0.0;
  double alpha = 0.0;
  /// From the leak identity (expected_escape_leak).
  double escape_time = 0.0;
  /// The windowed chain has a closed class: no escape at all.
  bool absorbing = false;
  /// alpha rounds to 1 within 1e-12 although the window leaks.
  bool alpha_saturated = false;
};

struct GrowthTable {
  std::vector<GrowthRow> rows;
  /// slopes[i] = -(log T[i+1] - log T[i]) / (log d[i+1] - log d[i]); NaN when a T is infinite.
  std::vector<double> slopes;
};

/// alpha and T at a = a0 + direction * offset for decreasing positive offsets.
/// T comes from the leak identity so that super-polynomially large escape
/// times stay finite once 1 - alpha drops below double resolution.
GrowthTable escape_growth_probe(const RandomMap1D& map, double a0, const std::vector<Interval>& window,
                                const std::vector<double>& offsets, const Grid& grid, int direction = +1);

bool in_window(const PhaseSpace& space, const std::vector<Interval>& window, double x);

}  // namespace rds
