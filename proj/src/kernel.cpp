#include "rds/kernel.hpp"

#include <cmath>
#include <sstream>

namespace rds {

std::pair<double, double> image_bounds(const RandomMap1D& map, double x) {
  const double a = map.lift(x, -1.0);
  const double b = map.lift(x, 1.0);
  return a <= b ? std::pair{a, b} : std::pair{b, a};
}

bool in_image(const RandomMap1D& map, double x, double y) {
  const auto [lo, hi] = image_bounds(map, x);
  if (!map.space().is_circle()) return y >= lo && y <= hi;
  const double span = hi - lo;
  if (span >= 1.0) return true;
  return map.space().wrap(y - lo) <= span;
}

void check_fiber(const RandomMap1D& map, double x) {
  auto fail = [&](double w, double d) {
    std::ostringstream os;
    os << "|df/dw| = " << d << " at x = " << x << ", w = " << w;
    throw Error(ErrorKind::DegenerateFiber, os.str());
  };
  if (map.affine_in_noise()) {
    const double d = std::abs(map.dw(x, 0.0));
    if (d < 1e-14) fail(0.0, d);
    return;
  }
  for (int j = 0; j <= 64; ++j) {
    const double w = -1.0 + j / 32.0;
    const double d = std::abs(map.dw(x, w));
    if (d < 1e-14) fail(w, d);
  }
}

double kernel_density(const RandomMap1D& map, double x, double y) {
  const auto [lo, hi] = image_bounds(map, x);
  auto at = [&](double ylift) {
    if (ylift < lo || ylift > hi) return 0.0;
    const double w = map.invert_noise(x, ylift);
    return map.noise().density(w) / std::abs(map.dw(x, w));
  };
  if (!map.space().is_circle()) return at(y);
  double sum = 0.0;
  const double base = map.space().wrap(y);
  for (double m = std::floor(lo) - 1.0; m <= std::ceil(hi); m += 1.0) sum += at(base + m);
  return sum;
}

double KernelSlice::density(double y) const { return kernel_density(map, x, y); }

KernelSlice kernel_at(const RandomMap1D& map, double x) {
  if (!map.space().contains(x)) throw Error(ErrorKind::InvalidParameter, "x outside the phase space");
  if (map.deterministic()) throw Error(ErrorKind::DegenerateFiber, "deterministic map has no density");
  check_fiber(map, x);
  KernelSlice slice{x, {}, map};
  const auto [lo, hi] = image_bounds(map, x);
  if (!map.space().is_circle()) {
    slice.support.push_back({lo, hi});
    return slice;
  }
  const double span = hi - lo;
  if (span >= 1.0) {
    slice.support.push_back({0.0, 1.0});
    return slice;
  }
  const double start = map.space().wrap(lo);
  const double end = start + span;
  if (end <= 1.0) {
    slice.support.push_back({start, end});
  } else {
    slice.support.push_back({0.0, end - 1.0});
    slice.support.push_back({start, 1.0});
  }
  return slice;
}

PreimageSet preimage_set(const RandomMap1D& map, double y, std::size_t resolution) {
  if (resolution < 64) throw Error(ErrorKind::InvalidParameter, "resolution must be >= 64");
  const PhaseSpace& space = map.space();
  const bool circle = space.is_circle();
  PreimageSet out{y, {}};

  const std::size_t samples = circle ? resolution : resolution + 1;
  const double step = space.length() / static_cast<double>(resolution);
  auto point = [&](std::size_t k) { return space.lower() + step * static_cast<double>(k); };
  std::vector<char> inside(samples);
  for (std::size_t k = 0; k < samples; ++k) inside[k] = in_image(map, point(k), y);

  // Boundary between a sample with membership `left_in` at t0 and its neighbour at t0 + step.
  auto refine = [&](double t0, bool left_in) {
    double a = t0, b = t0 + step;
    while (b - a > 1e-12) {
      const double m = 0.5 * (a + b);
      if (static_cast<bool>(in_image(map, space.wrap(m), y)) == left_in) a = m; else b = m;
    }
    return 0.5 * (a + b);
  };

  bool all_in = true;
  for (char c : inside) all_in = all_in && c;
  if (all_in) {
    out.components.push_back({space.lower(), space.upper()});
    return out;
  }

  std::vector<Interval> runs;
  if (circle) {
    // Start scanning right after an outside sample so every run closes.
    std::size_t origin = 0;
    while (inside[origin]) ++origin;
    bool open = false;
    double start = 0.0;
    for (std::size_t s = 1; s <= samples; ++s) {
      const std::size_t k = (origin + s) % samples;
      const std::size_t prev = (origin + s - 1) % samples;
      const double t_prev = point(origin + s - 1);
      if (inside[k] && !inside[prev]) {
        open = true;
        start = refine(t_prev, false);
      } else if (!inside[k] && inside[prev] && open) {
        double lo = start, hi = refine(t_prev, true);
        const double shift = std::floor(lo);
        runs.push_back({lo - shift, hi - shift});
        open = false;
      }
    }
  } else {
    bool open = inside[0];
    double start = space.lower();
    for (std::size_t k = 1; k < samples; ++k) {
      if (inside[k] && !inside[k - 1]) {
        open = true;
        start = refine(point(k - 1), false);
      } else if (!inside[k] && inside[k - 1]) {
        runs.push_back({start, refine(point(k - 1), true)});
        open = false;
      }
    }
    if (open) runs.push_back({start, space.upper()});
  }
  std::sort(runs.begin(), runs.end(), [](const Interval& p, const Interval& q) { return p.lo < q.lo; });
  out.components = std::move(runs);
  return out;
}

}  // namespace rds
