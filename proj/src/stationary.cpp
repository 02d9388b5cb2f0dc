#include "rds/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rds {

namespace {

// Pieces inside the fundamental domain, sorted and merged; circle arcs that
// cross 0 are split in two.
std::vector<Interval> normalize(const PhaseSpace& space, const std::vector<Interval>& in) {
  std::vector<Interval> pieces;
  for (const Interval& iv : in) {
    if (iv.hi < iv.lo) continue;
    if (space.is_circle()) {
      if (iv.hi - iv.lo >= 1.0) return {Interval{0.0, 1.0}};
      const double lo = space.wrap(iv.lo);
      const double hi = lo + (iv.hi - iv.lo);
      if (hi <= 1.0) {
        pieces.push_back({lo, hi});
      } else {
        pieces.push_back({lo, 1.0});
        pieces.push_back({0.0, hi - 1.0});
      }
    } else {
      const double lo = std::max(iv.lo, space.lower());
      const double hi = std::min(iv.hi, space.upper());
      if (hi >= lo) pieces.push_back({lo, hi});
    }
  }
  std::sort(pieces.begin(), pieces.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  for (const Interval& p : pieces) {
    if (!merged.empty() && p.lo <= merged.back().hi) merged.back().hi = std::max(merged.back().hi, p.hi);
    else merged.push_back(p);
  }
  return merged;
}

// Inverse of the circle split: the arc through 0 is rejoined and moved last.
std::vector<Interval> join(const PhaseSpace& space, std::vector<Interval> pieces) {
  if (!space.is_circle() || pieces.size() < 2) return pieces;
  if (pieces.front().lo <= 0.0 && pieces.back().hi >= 1.0) {
    const Interval first = pieces.front();
    pieces.erase(pieces.begin());
    pieces.back().hi = 1.0 + first.hi;
  }
  return pieces;
}

double measure(const std::vector<Interval>& pieces) {
  double s = 0.0;
  for (const Interval& p : pieces) s += p.length();
  return s;
}

std::vector<Interval> runs(const Grid& grid, const std::vector<char>& flag) {
  const std::size_t n = grid.size();
  std::vector<Interval> out;
  std::size_t i = 0;
  while (i < n) {
    if (!flag[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && flag[j]) ++j;
    out.push_back({grid.edge(i), grid.edge(j)});
    i = j;
  }
  if (grid.space().is_circle() && out.size() == 1 && out[0].length() >= grid.space().length() - 0.5 * grid.width()) {
    return {Interval{0.0, 1.0}};
  }
  return join(grid.space(), out);
}

std::vector<Interval> snap(const Grid& grid, const std::vector<Interval>& pieces) {
  std::vector<char> flag(grid.size(), 0);
  for (std::size_t c : window_cells(grid, pieces)) flag[c] = 1;
  return runs(grid, flag);
}

std::size_t cell_count(const Grid& grid, const std::vector<Interval>& pieces) {
  return window_cells(grid, pieces).size();
}

}  // namespace

SupportSet support_from_density(const Grid& grid, std::span<const double> phi, double tau_rel) {
  if (phi.size() != grid.size()) throw Error(ErrorKind::DimensionMismatch, "density length differs from grid size");
  if (!(tau_rel > 0.0 && tau_rel <= 1e-2)) throw Error(ErrorKind::InvalidParameter, "tau_rel must lie in (0, 1e-2]");
  const double top = *std::max_element(phi.begin(), phi.end());
  if (!(top > 0.0)) throw Error(ErrorKind::AllBelowThreshold, "density has no positive entry");
  SupportSet s;
  s.method = SupportMethod::DensityThreshold;
  s.threshold = tau_rel * top;
  std::vector<char> flag(phi.size(), 0);
  for (std::size_t i = 0; i < phi.size(); ++i) flag[i] = phi[i] >= s.threshold ? 1 : 0;
  s.components = runs(grid, flag);
  return s;
}

std::vector<ThresholdSensitivity> support_sensitivity(const Grid& grid, std::span<const double> phi) {
  const SupportSet base = support_from_density(grid, phi, 1e-6);
  std::vector<ThresholdSensitivity> out;
  for (double tau : {1e-8, 1e-7, 1e-6, 1e-5, 1e-4}) {
    const SupportSet s = support_from_density(grid, phi, tau);
    out.push_back({tau, s.components.size(), hausdorff(grid.space(), s.components, base.components)});
  }
  return out;
}

Interval interval_image(const RandomMap1D& map, const Interval& piece) {
  std::vector<double> xs{piece.lo, piece.hi};
  if (const auto c = map.critical_point()) {
    if (map.space().is_circle()) {
      for (double k = std::floor(piece.lo - *c); *c + k <= piece.hi; k += 1.0) {
        if (*c + k >= piece.lo) xs.push_back(*c + k);
      }
    } else if (*c > piece.lo && *c < piece.hi) {
      xs.push_back(*c);
    }
  } else if (std::holds_alternative<CustomFamily>(map.family())) {
    // Unknown turning points: dense sampling.
    for (int i = 1; i < 256; ++i) xs.push_back(piece.lo + piece.length() * i / 256.0);
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : xs) {
    for (double w : {-1.0, 1.0}) {
      const double y = map.lift(x, w);
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  }
  if (!map.space().is_circle()) {
    lo = std::clamp(lo, map.space().lower(), map.space().upper());
    hi = std::clamp(hi, map.space().lower(), map.space().upper());
  }
  return {lo, hi};
}

SupportSet minimal_invariant_set(const RandomMap1D& map, double seedpoint, const Grid& grid, std::uint64_t seed) {
  const PhaseSpace& space = map.space();
  if (!space.contains(seedpoint)) throw Error(ErrorKind::InvalidParameter, "seed point outside the phase space");
  Rng rng = Rng::derive(seed, 0);
  double x = space.wrap(seedpoint);
  for (int i = 0; i < 1000; ++i) x = map(x, map.noise().sample(rng));

  std::vector<Interval> u = normalize(space, {interval_image(map, {x, x})});
  const std::size_t cap = 10 * grid.size();
  std::size_t prev_cells = cell_count(grid, u);
  std::size_t quiet = 0;
  const double h = grid.width();
  for (std::size_t it = 0;; ++it) {
    std::vector<Interval> next = u;
    for (const Interval& p : u) next.push_back(interval_image(map, p));
    next = normalize(space, next);
    const double growth = measure(next) - measure(u);
    const std::size_t cells = cell_count(grid, next);
    quiet = cells == prev_cells ? quiet + 1 : 0;
    const bool full = measure(next) >= space.length() * (1.0 - 1e-15);
    const std::size_t last_cells = prev_cells;
    prev_cells = cells;
    u = std::move(next);
    // Endpoints creep geometrically (or algebraically near a tangency), so
    // stop once growth is negligible or the cell cover has settled.
    if (full || growth <= 1e-13 || (quiet >= 200 && growth < 1e-6 * h)) break;
    if (it + 1 >= cap) {
      std::ostringstream os;
      os << "no fixed cell set after " << cap << " iterations (last sizes " << last_cells << ", " << cells << " cells)";
      throw Error(ErrorKind::NoFixedSet, os.str());
    }
  }

  SupportSet s;
  s.method = SupportMethod::SetValued;
  s.threshold = 0.0;
  s.exact = join(space, u);
  s.components = snap(grid, u);
  return s;
}

double distance_to_set(const PhaseSpace& space, double x, const std::vector<Interval>& set) {
  const auto pieces = normalize(space, set);
  if (pieces.empty()) return std::numeric_limits<double>::infinity();
  const double xw = space.wrap(x);
  double best = std::numeric_limits<double>::infinity();
  for (const Interval& p : pieces) {
    if (xw >= p.lo && xw <= p.hi) return 0.0;
    best = std::min({best, space.distance(xw, p.lo), space.distance(xw, p.hi)});
  }
  return best;
}

double hausdorff(const PhaseSpace& space, const std::vector<Interval>& a, const std::vector<Interval>& b) {
  const auto pa = normalize(space, a);
  const auto pb = normalize(space, b);
  if (pa.empty() && pb.empty()) return 0.0;
  if (pa.empty() || pb.empty()) return std::numeric_limits<double>::infinity();

  auto directed = [&](const std::vector<Interval>& from, const std::vector<Interval>& to) {
    // d(., to) on a piece of `from` peaks at its endpoints or at the middle of a gap of `to`.
    std::vector<double> candidates;
    for (const Interval& p : from) {
      candidates.push_back(p.lo);
      candidates.push_back(p.hi);
    }
    for (std::size_t i = 0; i + 1 < to.size(); ++i) candidates.push_back(0.5 * (to[i].hi + to[i + 1].lo));
    if (space.is_circle()) candidates.push_back(space.wrap(0.5 * (to.back().hi + 1.0 + to.front().lo)));
    double worst = 0.0;
    for (double x : candidates) {
      const bool inside = std::any_of(from.begin(), from.end(), [&](const Interval& p) { return x >= p.lo && x <= p.hi; });
      if (inside) worst = std::max(worst, distance_to_set(space, x, to));
    }
    return worst;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

double Observable::operator()(const PhaseSpace& space, double x) const {
  if (kind == ObservableKind::Coordinate) return x;
  if (space.is_circle()) {
    if (hi - lo >= 1.0) return 1.0;
    return space.wrap(x - lo) <= hi - lo ? 1.0 : 0.0;
  }
  return x >= lo && x <= hi ? 1.0 : 0.0;
}

BirkhoffEstimate birkhoff_average(const RandomMap1D& map, double x0, const Observable& observable, std::size_t n,
                                  std::size_t burn_in, std::uint64_t seed) {
  if (n < 1000) throw Error(ErrorKind::InvalidParameter, "n must be at least 1000");
  if (!map.space().contains(x0)) throw Error(ErrorKind::InvalidParameter, "start point outside the phase space");
  constexpr std::size_t kBatches = 32;
  Rng rng = Rng::derive(seed, 0);
  double x = map.space().wrap(x0);
  for (std::size_t i = 0; i < burn_in; ++i) x = map(x, map.noise().sample(rng));

  std::vector<double> sums(kBatches, 0.0);
  std::vector<std::size_t> counts(kBatches, 0);
  const std::size_t per = n / kBatches;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x = map(x, map.noise().sample(rng));
    const double v = observable(map.space(), x);
    const std::size_t b = std::min(kBatches - 1, i / per);
    sums[b] += v;
    ++counts[b];
    total += v;
  }
  BirkhoffEstimate e;
  e.observable = observable;
  e.n = n;
  e.burn_in = burn_in;
  e.value = total / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t b = 0; b < kBatches; ++b) {
    const double d = sums[b] / static_cast<double>(counts[b]) - e.value;
    ss += d * d;
  }
  e.std_error = std::sqrt(ss / static_cast<double>(kBatches - 1) / static_cast<double>(kBatches));
  return e;
}

}  // namespace rds
