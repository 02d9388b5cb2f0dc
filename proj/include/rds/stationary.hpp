#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rds/model.hpp"
#include "rds/transfer.hpp"

namespace rds {

enum class SupportMethod { DensityThreshold, SetValued };

struct SupportSet {
  /// Disjoint, sorted by lo. On the circle the component through 0 is the
  /// last one and carries hi > 1; the whole circle is [0, 1].
  std::vector<Interval> components;
  SupportMethod method = SupportMethod::DensityThreshold;
  double threshold = 0.0;
  /// SetValued only: the limit set before snapping to cells.
  std::vector<Interval> exact;
};

/// Cells with phi >= tau_rel * max(phi), merged into maximal runs.
SupportSet support_from_density(const Grid& grid, std::span<const double> phi, double tau_rel = 1e-6);

/// Component count and Hausdorff distance to the tau_rel = 1e-6 support, for
/// tau_rel in {1e-8, 1e-7, ..., 1e-4}.
struct ThresholdSensitivity {
  double tau_rel = 0.0;
  std::size_t components = 0;
  double hausdorff = 0.0;
};
std::vector<ThresholdSensitivity> support_sensitivity(const Grid& grid, std::span<const double> phi);

/// Minimal forward-invariant set of the set-valued map F(x) = f(x; [-1, 1])
/// containing a burnt-in orbit point of seedpoint, as a union of intervals
/// (exact endpoints iterated to convergence), snapped outward to grid cells.
SupportSet minimal_invariant_set(const RandomMap1D& map, double seedpoint, const Grid& grid,
                                 std::uint64_t seed = 1);

/// Image F(I) of one interval in lift coordinates of the phase space
/// (for circle maps the result may have length >= 1).
Interval interval_image(const RandomMap1D& map, const Interval& piece);

/// Hausdorff distance between two finite unions of intervals.
double hausdorff(const PhaseSpace& space, const std::vector<Interval>& a, const std::vector<Interval>& b);

/// Supremum distance from x to the set (0 inside).
double distance_to_set(const PhaseSpace& space, double x, const std::vector<Interval>& set);

enum class ObservableKind { Indicator, Coordinate };

struct Observable {
  ObservableKind kind = ObservableKind::Coordinate;
  double lo = 0.0;
  double hi = 0.0;

  static Observable indicator(double lo, double hi) { return {ObservableKind::Indicator, lo, hi}; }
  static Observable coordinate() { return {}; }
  double operator()(const PhaseSpace& space, double x) const;
};

struct BirkhoffEstimate {
  Observable observable;
  double value = 0.0;
  std::size_t n = 0;
  std::size_t burn_in = 0;
  double std_error = 0.0;
};

/// Time average over n orbit points after burn_in; std_error from 32 batch means.
BirkhoffEstimate birkhoff_average(const RandomMap1D& map, double x0, const Observable& observable, std::size_t n,
                                  std::size_t burn_in, std::uint64_t seed);

}  // namespace rds
