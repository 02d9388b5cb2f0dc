#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rds/model.hpp"

namespace rds {

/// Transition density k(x, .) of one starting point.
struct KernelSlice {
  double x = 0.0;
  /// U_x as at most two non-wrapping intervals inside the fundamental domain
  /// (interval spaces keep the raw image, which may stick out of the space).
  std::vector<Interval> support;
  RandomMap1D map;

  double density(double y) const;
};

/// Lift image f(x; [-1, 1]) as an ordered pair (lo <= hi).
std::pair<double, double> image_bounds(const RandomMap1D& map, double x);

/// y in U_x, with circle wraparound.
bool in_image(const RandomMap1D& map, double x, double y);

/// Change-of-variables density g(w(x, y)) / |df/dw|, summed over lifts of y on the circle.
double kernel_density(const RandomMap1D& map, double x, double y);

/// Throws DegenerateFiber when |df/dw| < 1e-14 somewhere on the probe grid of [-1, 1].
void check_fiber(const RandomMap1D& map, double x);

KernelSlice kernel_at(const RandomMap1D& map, double x);

struct PreimageSet {
  double y = 0.0;
  /// V_y components; on the circle a component crossing 0 is kept whole with hi > 1.
  std::vector<Interval> components;
};

PreimageSet preimage_set(const RandomMap1D& map, double y, std::size_t resolution = 1024);

}  // namespace rds
