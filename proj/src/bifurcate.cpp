#include "rds/bifurcate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rds/parallel.hpp"
#include "rds/spectral.hpp"
#include "rds/stationary.hpp"

namespace rds {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> word_from_bits(std::size_t bits, std::size_t k) {
  std::vector<int> w(k);
  for (std::size_t i = 0; i < k; ++i) w[i] = (bits >> i) & 1U ? 1 : -1;
  return w;
}

std::vector<int> rotate(const std::vector<int>& w, std::size_t s) {
  std::vector<int> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[(i + s) % w.size()];
  return out;
}

bool is_canonical(const std::vector<int>& w) {
  for (std::size_t s = 1; s < w.size(); ++s) {
    if (rotate(w, s) < w) return false;
  }
  return true;
}

std::vector<std::vector<int>> words_of_length(std::size_t k, bool canonical_only) {
  std::vector<std::vector<int>> out;
  for (std::size_t b = 0; b < (std::size_t{1} << k); ++b) {
    auto w = word_from_bits(b, k);
    if (!canonical_only || is_canonical(w)) out.push_back(std::move(w));
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::string word_string(const std::vector<int>& w) {
  std::string s;
  for (int v : w) s += v > 0 ? '+' : '-';
  return s;
}

// Signed circle difference in (-1/2, 1/2]; plain difference on intervals.
double signed_diff(const PhaseSpace& space, double x, double y) {
  double d = x - y;
  if (space.is_circle()) d -= std::round(d);
  return d;
}

std::vector<double> orbit_points(const RandomMap1D& map, double x, const std::vector<int>& word) {
  std::vector<double> pts(word.size() + 1);
  pts[0] = map.space().wrap(x);
  for (std::size_t i = 0; i < word.size(); ++i) pts[i + 1] = map(pts[i], static_cast<double>(word[i]));
  return pts;
}

// Newton on f^k(x) - x - p from x0; nullopt if it wanders or stalls.
std::optional<double> newton_root(const RandomMap1D& map, const std::vector<int>& word, long p, double x0) {
  double x = x0;
  for (int it = 0; it < 60; ++it) {
    const double r = compose(map, x, word) - x - static_cast<double>(p);
    if (std::abs(r) <= 1e-13) return x;
    const double d = compose_dx(map, x, word) - 1.0;
    if (std::abs(d) < 1e-12) return std::nullopt;
    const double step = r / d;
    x -= step;
    if (std::abs(x - x0) > 0.05 || !std::isfinite(x)) return std::nullopt;
    if (std::abs(step) < 1e-15) break;
  }
  const double r = compose(map, x, word) - x - static_cast<double>(p);
  if (std::abs(r) <= 1e-11) return x;
  return std::nullopt;
}

double composite_da(const RandomMap1D& family, double a, double x, const std::vector<int>& word) {
  const double h = 1e-6;
  return (compose(family.with_parameter(a + h), x, word) - compose(family.with_parameter(a - h), x, word)) / (2.0 * h);
}

double composite_dxx(const RandomMap1D& map, double x, const std::vector<int>& word) {
  const double h = 1e-5;
  return (compose_dx(map, x + h, word) - compose_dx(map, x - h, word)) / (2.0 * h);
}

std::vector<ExtremalOrbit> orbits_of_word(const RandomMap1D& map, const std::vector<int>& word,
                                          std::size_t scan_points) {
  const PhaseSpace& space = map.space();
  const std::size_t k = word.size();
  std::vector<ExtremalOrbit> out;
  for (const WordRoot& r : word_roots(map, word, scan_points)) {
    const auto pts = orbit_points(map, r.x, word);
    bool lower_period = false;
    for (std::size_t q = 1; q < k && !lower_period; ++q) {
      if (k % q == 0 && rotate(word, q) == word && space.distance(pts[q], pts[0]) < 1e-9) lower_period = true;
    }
    if (lower_period) continue;
    bool seen = false;
    for (const auto& o : out) {
      for (std::size_t i = 0; i < k && !seen; ++i) {
        if (rotate(word, i) == word && space.distance(o.points[i], pts[0]) < 1e-9) seen = true;
      }
    }
    if (seen) continue;
    ExtremalOrbit o;
    o.period = k;
    o.word = word;
    o.points.assign(pts.begin(), pts.begin() + static_cast<long>(k));
    o.multiplier = r.multiplier;
    o.stability = classify_multiplier(o.multiplier);
    o.winding = r.winding;
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<Interval> union_of(const PhaseSpace& space, std::vector<Interval> pieces) {
  std::vector<Interval> flat;
  for (const Interval& p : pieces) {
    if (space.is_circle() && p.hi - p.lo >= 1.0) return {{0.0, 1.0}};
    if (space.is_circle() && p.hi > 1.0) {
      flat.push_back({p.lo, 1.0});
      flat.push_back({0.0, p.hi - 1.0});
    } else {
      flat.push_back(p);
    }
  }
  std::sort(flat.begin(), flat.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  std::vector<Interval> merged;
  for (const Interval& p : flat) {
    if (!merged.empty() && p.lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, p.hi);
    } else {
      merged.push_back(p);
    }
  }
  if (space.is_circle() && merged.size() > 1 && merged.front().lo <= 0.0 && merged.back().hi >= 1.0) {
    const Interval first = merged.front();
    merged.erase(merged.begin());
    merged.back().hi = 1.0 + first.hi;
  }
  if (space.is_circle() && merged.size() == 1 && merged[0].lo <= 0.0 && merged[0].hi >= 1.0) return {{0.0, 1.0}};
  return merged;
}

std::vector<Interval> support_with_seeds(const RandomMap1D& map, std::size_t grid_cells,
                                         const std::vector<double>& seeds) {
  if (map.deterministic()) return {};
  const Grid grid(map.space(), grid_cells);
  std::vector<Interval> all;
  for (double s : seeds) {
    const auto set = minimal_invariant_set(map, map.space().wrap(s), grid, 1);
    all.insert(all.end(), set.exact.begin(), set.exact.end());
  }
  return union_of(map.space(), all);
}

// Hausdorff distance between the supports at both bracket ends.
double support_jump(const RandomMap1D& family, double lo, double hi, std::size_t grid_cells) {
  const auto a = set_valued_support(family.with_parameter(lo), grid_cells);
  const auto b = set_valued_support(family.with_parameter(hi), grid_cells);
  return hausdorff(family.space(), a, b);
}

bool passes_support_filter(const RandomMap1D& family, BifurcationEvent& e, double lo, double hi,
                           const DetectorOptions& options) {
  if (!options.require_support_change) return true;
  if (family.deterministic()) {
    e.notes.push_back("deterministic map: support-change filter skipped");
    return true;
  }
  e.evidence.hausdorff_jump = support_jump(family, lo, hi, options.support_grid);
  return e.evidence.hausdorff_jump > options.jump_tol;
}

std::vector<double> coarse_grid(double a_lo, double a_hi, std::size_t steps) {
  std::vector<double> a(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) a[i] = a_lo + (a_hi - a_lo) * static_cast<double>(i) / static_cast<double>(steps);
  return a;
}

void check_range(double a_lo, double a_hi, double resolution) {
  if (!(std::isfinite(a_lo) && std::isfinite(a_hi) && a_lo < a_hi)) {
    throw Error(ErrorKind::InvalidParameter, "parameter range must be finite with a_lo < a_hi");
  }
  if (!(resolution > 0.0)) throw Error(ErrorKind::InvalidParameter, "resolution must be positive");
}

std::vector<BifurcationEvent> dedupe(std::vector<BifurcationEvent> events, double resolution) {
  std::sort(events.begin(), events.end(),
            [](const BifurcationEvent& x, const BifurcationEvent& y) { return x.a_star < y.a_star; });
  std::vector<BifurcationEvent> out;
  for (auto& e : events) {
    if (!out.empty() && out.back().type == e.type &&
        std::abs(out.back().a_star - e.a_star) <= 2.0 * resolution + 0.5 * (out.back().bracket + e.bracket)) {
      continue;
    }
    out.push_back(std::move(e));
  }
  return out;
}

// Critical orbit f^l(c; w), l = 1..l_max, all words, breadth first.
struct CriticalOrbit {
  std::vector<double> values;
  std::vector<std::size_t> length;
  std::vector<std::size_t> bits;
};

CriticalOrbit critical_orbit(const RandomMap1D& map, double c, std::size_t l_max) {
  CriticalOrbit co;
  std::vector<double> level{c};
  std::vector<std::size_t> level_bits{0};
  for (std::size_t l = 1; l <= l_max; ++l) {
    std::vector<double> next;
    std::vector<std::size_t> next_bits;
    next.reserve(level.size() * 2);
    const std::vector<int> letters = map.deterministic() ? std::vector<int>{1} : std::vector<int>{-1, 1};
    for (std::size_t i = 0; i < level.size(); ++i) {
      for (int s : letters) {
        next.push_back(map(level[i], static_cast<double>(s)));
        next_bits.push_back(level_bits[i] | (s > 0 ? std::size_t{1} << (l - 1) : 0));
      }
    }
    for (std::size_t i = 0; i < next.size(); ++i) {
      co.values.push_back(next[i]);
      co.length.push_back(l);
      co.bits.push_back(next_bits[i]);
    }
    level = std::move(next);
    level_bits = std::move(next_bits);
  }
  return co;
}

struct Gap {
  double value = kNaN;
  std::size_t index = 0;
};

Gap nearest_gap(const PhaseSpace& space, const CriticalOrbit& co, double xbar) {
  Gap g;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < co.values.size(); ++i) {
    const double d = signed_diff(space, co.values[i], xbar);
    if (std::abs(d) < best) {
      best = std::abs(d);
      g.value = d;
      g.index = i;
    }
  }
  return g;
}

}  // namespace

const char* to_string(Stability s) {
  switch (s) {
    case Stability::Attracting: return "Attracting";
    case Stability::Repelling: return "Repelling";
    case Stability::SaddleNodeCandidate: return "SaddleNodeCandidate";
    case Stability::NonHyperbolicOther: return "NonHyperbolicOther";
  }
  return "?";
}

const char* to_string(EventType t) {
  switch (t) {
    case EventType::SaddleNode: return "SaddleNode";
    case EventType::Homoclinic: return "Homoclinic";
    case EventType::Boundary: return "Boundary";
    case EventType::SupportJump: return "SupportJump";
  }
  return "?";
}

const char* to_string(EventLabel l) { return l == EventLabel::Intermittency ? "Intermittency" : "Transient"; }

double compose(const RandomMap1D& map, double x, const std::vector<int>& word) {
  // Stay on the lift: f(x + 1) = f(x) + 1 for circle maps.
  for (int w : word) x = map.lift(x, static_cast<double>(w));
  return x;
}

double compose_dx(const RandomMap1D& map, double x, const std::vector<int>& word) {
  double d = 1.0;
  for (int w : word) {
    d *= map.dx(x, static_cast<double>(w));
    x = map.lift(x, static_cast<double>(w));
  }
  return d;
}

Stability classify_multiplier(double m, double tol) {
  if (std::abs(m - 1.0) <= tol) return Stability::SaddleNodeCandidate;
  if (std::abs(m) <= tol || std::abs(m + 1.0) <= tol || !std::isfinite(m)) return Stability::NonHyperbolicOther;
  return std::abs(m) < 1.0 ? Stability::Attracting : Stability::Repelling;
}

std::vector<WordRoot> word_roots(const RandomMap1D& map, const std::vector<int>& word, std::size_t scan_points) {
  if (word.empty()) throw Error(ErrorKind::InvalidParameter, "empty word");
  if (scan_points < 16) throw Error(ErrorKind::InvalidParameter, "scan_points must be at least 16");
  const PhaseSpace& space = map.space();
  const bool circle = space.is_circle();
  const std::size_t n = scan_points;
  std::vector<double> xs(n + 1), g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    xs[i] = space.lower() + space.length() * static_cast<double>(i) / static_cast<double>(n);
    g[i] = compose(map, xs[i], word) - xs[i];
  }
  long pmin = 0, pmax = 0;
  if (circle) {
    const auto [mn, mx] = std::minmax_element(g.begin(), g.end());
    pmin = static_cast<long>(std::floor(*mn));
    pmax = static_cast<long>(std::ceil(*mx));
  }

  std::vector<WordRoot> roots;
  for (long p = pmin; p <= pmax; ++p) {
    const double pd = static_cast<double>(p);
    auto r = [&](double x) { return compose(map, x, word) - x - pd; };
    std::vector<double> found;
    const std::size_t last = circle ? n : n + 1;  // node n repeats node 0 on the circle
    for (std::size_t i = 0; i < last; ++i) {
      const double ri = g[i] - pd;
      if (ri == 0.0) {
        found.push_back(xs[i]);
        continue;
      }
      if (i + 1 > n) continue;
      const double rj = g[i + 1] - pd;
      if (rj == 0.0 || (ri < 0.0) == (rj < 0.0)) continue;
      double lo = xs[i], hi = xs[i + 1], rlo = ri;
      for (int it = 0; it < 200 && hi - lo > 4e-16 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double rm = r(mid);
        if (rm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((rm < 0.0) == (rlo < 0.0)) {
          lo = mid;
          rlo = rm;
        } else {
          hi = mid;
        }
      }
      found.push_back(0.5 * (lo + hi));
    }
    // Double roots touch zero without a sign change: refine local extrema of r.
    for (std::size_t i = 0; i < n; ++i) {
      if (!circle && (i == 0)) continue;
      const std::size_t im = i == 0 ? n - 1 : i - 1;
      const double r0 = g[im] - pd, r1 = g[i] - pd, r2 = g[i + 1] - pd;
      if (r1 == 0.0 || (r0 < 0.0) != (r1 < 0.0) || (r2 < 0.0) != (r1 < 0.0)) continue;
      if ((r1 - r0) * (r2 - r1) >= 0.0) continue;
      const double s = r1 > 0.0 ? 1.0 : -1.0;  // minimize s * r
      double lo = xs[i] - (xs[1] - xs[0]), hi = xs[i + 1];
      constexpr double phi = 0.6180339887498949;
      double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
      double fc = s * r(c), fd = s * r(d);
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        if (fc < fd) {
          hi = d;
          d = c;
          fd = fc;
          c = hi - phi * (hi - lo);
          fc = s * r(c);
        } else {
          lo = c;
          c = d;
          fc = fd;
          d = lo + phi * (hi - lo);
          fd = s * r(d);
        }
      }
      const double x = 0.5 * (lo + hi);
      if (std::abs(r(x)) <= 1e-12) found.push_back(x);
    }
    for (double x : found) {
      // Newton polish where the root is simple.
      for (int it = 0; it < 3; ++it) {
        const double d = compose_dx(map, x, word) - 1.0;
        if (std::abs(d) < 1e-6) break;
        const double xn = x - r(x) / d;
        if (!(std::abs(xn - x) < 1e-9)) break;
        x = xn;
      }
      WordRoot wr;
      wr.x = circle ? space.wrap(x) : x;
      wr.winding = p;
      wr.multiplier = compose_dx(map, x, word);
      roots.push_back(wr);
    }
  }
  std::sort(roots.begin(), roots.end(), [](const WordRoot& x, const WordRoot& y) { return x.x < y.x; });
  std::vector<WordRoot> out;
  for (const WordRoot& w : roots) {
    bool dup = false;
    for (const WordRoot& o : out) dup = dup || (o.winding == w.winding && space.distance(o.x, w.x) < 1e-10);
    if (!dup) out.push_back(w);
  }
  return out;
}

std::vector<ExtremalOrbit> find_extremal_orbits(const RandomMap1D& map, std::size_t k_max, std::size_t scan_points) {
  if (k_max < 1 || k_max > 6) throw Error(ErrorKind::InvalidParameter, "k_max must be in [1, 6]");
  std::vector<ExtremalOrbit> out;
  if (map.deterministic()) {
    // Both extremal words coincide; keep the all-plus words only.
    for (std::size_t k = 1; k <= k_max; ++k) {
      auto o = orbits_of_word(map, std::vector<int>(k, 1), scan_points);
      out.insert(out.end(), o.begin(), o.end());
    }
    return out;
  }
  for (std::size_t k = 1; k <= k_max; ++k) {
    for (const auto& w : words_of_length(k, true)) {
      auto o = orbits_of_word(map, w, scan_points);
      out.insert(out.end(), o.begin(), o.end());
    }
  }
  return out;
}

bool unfolds_generically(double da_word, double da_other, double threshold) {
  return std::abs(da_word - da_other) > threshold;
}

std::vector<Interval> set_valued_support(const RandomMap1D& map, std::size_t grid_cells) {
  const PhaseSpace& space = map.space();
  std::vector<double> seeds;
  for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) seeds.push_back(space.lower() + t * space.length());
  return support_with_seeds(map, grid_cells, seeds);
}

std::vector<BifurcationEvent> detect_saddle_node(const RandomMap1D& family, double a_lo, double a_hi,
                                                 std::size_t k_max, double resolution,
                                                 const DetectorOptions& options) {
  check_range(a_lo, a_hi, resolution);
  if (k_max < 1 || k_max > 6) throw Error(ErrorKind::InvalidParameter, "k_max must be in [1, 6]");
  const auto A = coarse_grid(a_lo, a_hi, std::max<std::size_t>(options.coarse_steps, 2));
  std::vector<std::vector<int>> words;
  for (std::size_t k = 1; k <= k_max; ++k) {
    if (family.deterministic()) {
      words.push_back(std::vector<int>(k, 1));
    } else {
      for (auto& w : words_of_length(k, true)) words.push_back(std::move(w));
    }
  }

  std::vector<std::vector<BifurcationEvent>> per_word(words.size());
  parallel_for(words.size(), [&](std::size_t wi) {
    const auto& word = words[wi];
    auto count = [&](double a) { return orbits_of_word(family.with_parameter(a), word, options.scan_points).size(); };
    std::vector<std::size_t> c(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) c[i] = count(A[i]);
    for (std::size_t i = 1; i < A.size(); ++i) {
      if (c[i] == c[i - 1]) continue;
      double lo = A[i - 1], hi = A[i];
      const std::size_t c0 = c[i - 1];
      while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        (count(mid) == c0 ? lo : hi) = mid;
      }
      const bool more_hi = count(hi) > count(lo);
      const double side = more_hi ? hi : lo;
      const RandomMap1D at = family.with_parameter(side);
      const auto orbits = orbits_of_word(at, word, options.scan_points);
      const ExtremalOrbit* best = nullptr;
      for (const auto& o : orbits) {
        if (!best || std::abs(o.multiplier - 1.0) < std::abs(best->multiplier - 1.0)) best = &o;
      }
      if (!best || std::abs(best->multiplier - 1.0) > 0.05) continue;  // count changed without a tangency

      BifurcationEvent e;
      e.type = EventType::SaddleNode;
      e.a_star = 0.5 * (lo + hi);
      e.bracket = hi - lo;
      e.evidence.word = word;
      e.evidence.x = best->points[0];
      const double d2 = composite_dxx(at, best->points[0], word);
      const double da = composite_da(family, side, best->points[0], word);
      e.genericity = {d2, da};
      e.generic = std::abs(d2) > 1e-6 && std::abs(da) > 1e-6;
      if (!e.generic) e.notes.push_back("NonGeneric: unfolding derivative below 1e-6");

      // Multiplier of the same-side branch approaching the tangency.
      const double dir = more_hi ? 1.0 : -1.0;
      const bool below = best->multiplier < 1.0;
      for (double off : {3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6, 3e-7, 1e-7}) {
        if (off < 2.0 * resolution) break;
        const double a = side + dir * off;
        if (a < a_lo || a > a_hi || std::abs(a - side) > A[1] - A[0]) continue;
        const auto os = orbits_of_word(family.with_parameter(a), word, options.scan_points);
        const ExtremalOrbit* near = nullptr;
        for (const auto& o : os) {
          if ((o.multiplier < 1.0) != below) continue;
          if (!near || at.space().distance(o.points[0], best->points[0]) <
                           at.space().distance(near->points[0], best->points[0])) {
            near = &o;
          }
        }
        if (near) e.evidence.multiplier_trace.emplace_back(a, near->multiplier);
      }
      e.evidence.multiplier_trace.emplace_back(side, best->multiplier);
      std::ostringstream os;
      os.precision(10);
      os << "word " << word_string(word) << " tangency at x=" << best->points[0] << " multiplier "
         << best->multiplier;
      e.evidence.summary = os.str();
      if (!passes_support_filter(family, e, lo, hi, options)) continue;
      per_word[wi].push_back(std::move(e));
    }
  });
  std::vector<BifurcationEvent> all;
  for (auto& v : per_word) all.insert(all.end(), v.begin(), v.end());
  return dedupe(std::move(all), resolution);
}

std::vector<BifurcationEvent> detect_homoclinic(const RandomMap1D& family, double a_lo, double a_hi,
                                                const ExtremalOrbit& orbit, std::size_t l_max, double resolution,
                                                const DetectorOptions& options) {
  check_range(a_lo, a_hi, resolution);
  if (l_max < 1 || l_max > 12) throw Error(ErrorKind::InvalidParameter, "l_max must be in [1, 12]");
  if (orbit.points.empty() || orbit.word.size() != orbit.points.size()) {
    throw Error(ErrorKind::InvalidParameter, "boundary orbit needs one point per word letter");
  }
  const auto c = family.critical_point();
  if (!c) throw Error(ErrorKind::InvalidParameter, "family has no critical point");
  const PhaseSpace& space = family.space();
  const std::size_t k = orbit.word.size();

  // Continue the orbit from one parameter to the next.
  auto continue_orbit = [&](double a, double x0, double a_prev) {
    const auto x = newton_root(family.with_parameter(a), orbit.word, orbit.winding, x0);
    if (!x) {
      std::ostringstream os;
      os << "boundary orbit " << word_string(orbit.word) << " lost between a=" << a_prev << " and a=" << a;
      throw Error(ErrorKind::LostTrack, os.str());
    }
    return *x;
  };
  auto gaps_at = [&](double a, double x0) {
    const RandomMap1D map = family.with_parameter(a);
    const auto pts = orbit_points(map, x0, orbit.word);
    const auto co = critical_orbit(map, *c, l_max);
    std::vector<Gap> g(k);
    for (std::size_t j = 0; j < k; ++j) g[j] = nearest_gap(space, co, pts[j]);
    return std::make_pair(g, co);
  };

  const auto A = coarse_grid(a_lo, a_hi, std::max<std::size_t>(options.coarse_steps, 2));
  std::vector<double> x(A.size());
  x[0] = continue_orbit(A[0], orbit.points[0], A[0]);
  for (std::size_t i = 1; i < A.size(); ++i) x[i] = continue_orbit(A[i], x[i - 1], A[i - 1]);
  std::vector<std::vector<Gap>> G(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) G[i] = gaps_at(A[i], x[i]).first;

  std::vector<BifurcationEvent> events;
  for (std::size_t i = 1; i < A.size(); ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double g0 = G[i - 1][j].value, g1 = G[i][j].value;
      if (g0 == 0.0 || g1 == 0.0 || (g0 < 0.0) == (g1 < 0.0)) continue;
      double lo = A[i - 1], hi = A[i], xlo = x[i - 1], xhi = x[i];
      Gap glo = G[i - 1][j], ghi = G[i][j];
      while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        const double xm = continue_orbit(mid, xlo, lo);
        const Gap gm = gaps_at(mid, xm).first[j];
        if ((gm.value < 0.0) == (glo.value < 0.0)) {
          lo = mid;
          xlo = xm;
          glo = gm;
        } else {
          hi = mid;
          xhi = xm;
          ghi = gm;
        }
      }
      // A genuine crossing keeps the same critical-orbit point on both sides.
      if (glo.index != ghi.index || std::abs(glo.value) > 1e-3 || std::abs(ghi.value) > 1e-3) continue;
      const auto co = gaps_at(lo, xlo).second;
      BifurcationEvent e;
      e.type = EventType::Homoclinic;
      e.a_star = 0.5 * (lo + hi);
      e.bracket = hi - lo;
      e.evidence.word = orbit.word;
      e.evidence.other_word = word_from_bits(co.bits[glo.index], co.length[glo.index]);
      e.evidence.x = orbit_points(family.with_parameter(lo), xlo, orbit.word)[j];
      e.evidence.unfolding = (ghi.value - glo.value) / (hi - lo);
      e.genericity = {e.evidence.unfolding};
      e.generic = std::abs(e.evidence.unfolding) > 1e-6;
      if (!e.generic) e.notes.push_back("NonGeneric: gap derivative below 1e-6");
      std::ostringstream os;
      os.precision(10);
      os << "f^" << co.length[glo.index] << "(c; " << word_string(e.evidence.other_word) << ") meets orbit "
         << word_string(orbit.word) << " point " << e.evidence.x << "; gap slope " << e.evidence.unfolding;
      e.evidence.summary = os.str();
      (void)xhi;
      if (!passes_support_filter(family, e, lo, hi, options)) continue;
      events.push_back(std::move(e));
    }
  }
  return dedupe(std::move(events), resolution);
}

std::vector<BifurcationEvent> detect_boundary(const RandomMap1D& family, double a_lo, double a_hi,
                                              std::size_t k_max, double resolution,
                                              const DetectorOptions& options) {
  check_range(a_lo, a_hi, resolution);
  if (k_max < 1 || k_max > 6) throw Error(ErrorKind::InvalidParameter, "k_max must be in [1, 6]");
  if (family.deterministic()) return {};
  const PhaseSpace& space = family.space();
  const auto A = coarse_grid(a_lo, a_hi, std::max<std::size_t>(options.coarse_steps, 2));
  const double track_radius = 0.02, pair_radius = 0.05;

  std::vector<BifurcationEvent> events;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const auto words = words_of_length(k, false);
    // roots[i][w]
    std::vector<std::vector<std::vector<WordRoot>>> roots(A.size(), std::vector<std::vector<WordRoot>>(words.size()));
    parallel_for(A.size(), [&](std::size_t i) {
      const RandomMap1D map = family.with_parameter(A[i]);
      for (std::size_t w = 0; w < words.size(); ++w) roots[i][w] = word_roots(map, words[w], options.scan_points);
    });
    auto follow = [&](const std::vector<WordRoot>& cands, const WordRoot& from, bool attracting) -> const WordRoot* {
      const WordRoot* best = nullptr;
      for (const auto& r : cands) {
        const bool att = r.multiplier > 0.0 && r.multiplier < 1.0;
        const bool rep = r.multiplier > 1.0;
        if ((attracting && !att) || (!attracting && !rep) || r.winding != from.winding) continue;
        if (space.distance(r.x, from.x) > track_radius) continue;
        if (!best || space.distance(r.x, from.x) < space.distance(best->x, from.x)) best = &r;
      }
      return best;
    };
    auto newton_at = [&](double a, const std::vector<int>& w, const WordRoot& from) -> std::optional<WordRoot> {
      const RandomMap1D map = family.with_parameter(a);
      const auto x = newton_root(map, w, from.winding, from.x);
      if (!x) return std::nullopt;
      WordRoot r = from;
      r.x = *x;
      r.multiplier = compose_dx(map, *x, w);
      return r;
    };

    for (std::size_t i = 1; i < A.size(); ++i) {
      for (std::size_t w = 0; w < words.size(); ++w) {
        for (const auto& ra : roots[i - 1][w]) {
          if (!(ra.multiplier > 0.0 && ra.multiplier < 1.0)) continue;
          const WordRoot* na = follow(roots[i][w], ra, true);
          if (!na) continue;
          for (std::size_t v = 0; v < words.size(); ++v) {
            if (v == w) continue;
            for (const auto& rr : roots[i - 1][v]) {
              if (!(rr.multiplier > 1.0) || space.distance(ra.x, rr.x) > pair_radius) continue;
              const WordRoot* nr = follow(roots[i][v], rr, false);
              if (!nr) continue;
              const double d0 = signed_diff(space, ra.x, rr.x);
              const double d1 = signed_diff(space, na->x, nr->x);
              if (d0 == 0.0 || (d0 < 0.0) == (d1 < 0.0)) continue;
              double lo = A[i - 1], hi = A[i];
              WordRoot pa = ra, pr = rr;
              bool lost = false;
              while (hi - lo > resolution) {
                const double mid = 0.5 * (lo + hi);
                const auto ma = newton_at(mid, words[w], pa);
                const auto mr = newton_at(mid, words[v], pr);
                if (!ma || !mr) {
                  lost = true;
                  break;
                }
                if ((signed_diff(space, ma->x, mr->x) < 0.0) == (d0 < 0.0)) {
                  lo = mid;
                  pa = *ma;
                  pr = *mr;
                } else {
                  hi = mid;
                }
              }
              if (lost || std::abs(signed_diff(space, pa.x, pr.x)) > 1e-4) continue;
              if (!(pa.multiplier > 0.0 && pa.multiplier < 1.0 && pr.multiplier > 1.0)) continue;
              BifurcationEvent e;
              e.type = EventType::Boundary;
              e.a_star = 0.5 * (lo + hi);
              e.bracket = hi - lo;
              e.evidence.word = words[w];
              e.evidence.other_word = words[v];
              e.evidence.x = pa.x;
              const double da_w = composite_da(family, e.a_star, pa.x, words[w]);
              const double da_v = composite_da(family, e.a_star, pr.x, words[v]);
              e.genericity = {da_w, da_v};
              e.evidence.unfolding = da_w - da_v;
              e.generic = unfolds_generically(da_w, da_v);
              if (!e.generic) e.notes.push_back("NonGeneric: equal d/da displacements within 1e-6");
              std::ostringstream os;
              os.precision(10);
              os << "attracting " << word_string(words[w]) << " (mult " << pa.multiplier << ") meets repelling "
                 << word_string(words[v]) << " (mult " << pr.multiplier << ") at x=" << pa.x;
              e.evidence.summary = os.str();
              if (!passes_support_filter(family, e, lo, hi, options)) continue;
              events.push_back(std::move(e));
            }
          }
        }
      }
    }
  }
  return dedupe(std::move(events), resolution);
}

SweepReport sweep(const RandomMap1D& family, double a_lo, double a_hi, std::size_t steps,
                  const SweepOptions& options) {
  if (steps < 2) throw Error(ErrorKind::InvalidParameter, "steps must be at least 2");
  if (!(a_lo < a_hi)) throw Error(ErrorKind::InvalidParameter, "a_lo must be below a_hi");
  SweepReport rep;
  const Grid grid(family.space(), options.grid);
  const double step = (a_hi - a_lo) / static_cast<double>(steps - 1);
  for (std::size_t i = 0; i < steps; ++i) rep.a.push_back(a_lo + step * static_cast<double>(i));
  rep.points.resize(steps);

  parallel_for(steps, [&](std::size_t i) {
    SweepPoint& p = rep.points[i];
    p.a = rep.a[i];
    try {
      const RandomMap1D map = family.with_parameter(p.a);
      const UlamMatrix m = build_ulam(map, grid, options.quadrature_order);
      const SpectralSet s = eigen(m, 8, 1e-10);
      p.densities = stationary_densities(s);
      p.m = p.densities.size();
      p.eta = s.eta;
      std::vector<double> seeds;
      std::vector<std::vector<Interval>> dsupports;
      for (const auto& d : p.densities) {
        const auto top = static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
        seeds.push_back(grid.mid(top));
        dsupports.push_back(support_from_density(grid, d).components);
      }
      p.support = support_with_seeds(map, options.grid, seeds);
      try {
        for (const auto& ci : cyclic_structure(s, m, p.densities, dsupports)) p.periods.push_back(ci.period);
      } catch (const Error&) {
        p.periods.assign(p.m, 0);
      }
    } catch (const std::exception& e) {
      p.error = e.what();
    }
  });

  std::vector<double> steps_h;
  for (std::size_t i = 0; i < steps; ++i) {
    SweepPoint& p = rep.points[i];
    if (i == 0 || !p.ok() || !rep.points[i - 1].ok()) {
      p.hausdorff_prev = kNaN;
      p.supdist_prev = kNaN;
      continue;
    }
    const SweepPoint& q = rep.points[i - 1];
    p.hausdorff_prev = hausdorff(family.space(), p.support, q.support);
    if (p.m == q.m) {
      double sup = 0.0;
      for (std::size_t k = 0; k < p.m; ++k) {
        for (std::size_t j = 0; j < p.densities[k].size(); ++j) {
          sup = std::max(sup, std::abs(p.densities[k][j] - q.densities[k][j]));
        }
      }
      p.supdist_prev = sup;
    } else {
      p.supdist_prev = kNaN;
    }
    if (std::isfinite(p.hausdorff_prev) && p.hausdorff_prev > 0.0) steps_h.push_back(p.hausdorff_prev);
  }
  for (const auto& p : rep.points) {
    if (!p.ok()) rep.notes.push_back("a=" + std::to_string(p.a) + ": " + p.error);
  }
  double median = 0.0;
  if (!steps_h.empty()) {
    std::nth_element(steps_h.begin(), steps_h.begin() + static_cast<long>(steps_h.size() / 2), steps_h.end());
    median = steps_h[steps_h.size() / 2];
  }
  rep.jump_threshold = options.jump_factor * std::max(median, grid.width());

  auto label_at = [&](std::size_t i) {
    return rep.points[i - 1].m == rep.points[i].m ? EventLabel::Intermittency : EventLabel::Transient;
  };
  auto flank = [&](double a) {
    std::size_t i = 1;
    while (i + 1 < steps && rep.a[i] < a) ++i;
    return i;
  };

  struct Jump {
    BifurcationEvent event;
    double lo, hi;
    std::size_t index;
  };
  std::vector<Jump> jumps;
  for (std::size_t i = 1; i < steps; ++i) {
    const SweepPoint& p = rep.points[i];
    if (!std::isfinite(p.hausdorff_prev) || p.hausdorff_prev <= rep.jump_threshold) continue;
    double lo = rep.a[i - 1], hi = rep.a[i];
    auto s_lo = rep.points[i - 1].support, s_hi = p.support;
    std::vector<double> seeds;
    for (const auto* s : {&s_lo, &s_hi}) {
      for (const Interval& c : *s) seeds.push_back(0.5 * (c.lo + c.hi));
    }
    try {
      while (hi - lo > options.resolution) {
        const double mid = 0.5 * (lo + hi);
        auto s_mid = support_with_seeds(family.with_parameter(mid), options.grid, seeds);
        if (hausdorff(family.space(), s_mid, s_lo) <= hausdorff(family.space(), s_mid, s_hi)) {
          lo = mid;
          s_lo = std::move(s_mid);
        } else {
          hi = mid;
          s_hi = std::move(s_mid);
        }
      }
    } catch (const Error& e) {
      rep.notes.push_back(std::string("jump refinement stopped: ") + e.what());
    }
    BifurcationEvent e;
    e.type = EventType::SupportJump;
    e.a_star = 0.5 * (lo + hi);
    e.bracket = hi - lo;
    e.label = label_at(i);
    e.evidence.hausdorff_jump = hausdorff(family.space(), s_lo, s_hi);
    std::ostringstream os;
    os.precision(6);
    os << "support " << s_lo.size() << " -> " << s_hi.size() << " components, Hausdorff jump "
       << e.evidence.hausdorff_jump;
    e.evidence.summary = os.str();
    jumps.push_back({std::move(e), lo, hi, i});
  }

  std::vector<BifurcationEvent> detected;
  if (options.run_detectors && !family.deterministic()) {
    DetectorOptions dopt;
    dopt.support_grid = options.grid;
    auto add = [&](const char* what, auto&& fn) {
      try {
        auto ev = fn();
        detected.insert(detected.end(), ev.begin(), ev.end());
      } catch (const Error& err) {
        rep.notes.push_back(std::string(what) + ": " + err.what());
      }
    };
    add("saddle-node detector", [&] { return detect_saddle_node(family, a_lo, a_hi, options.k_max, options.resolution, dopt); });
    add("boundary detector", [&] { return detect_boundary(family, a_lo, a_hi, options.k_max, options.resolution, dopt); });
    if (family.critical_point()) {
      for (const Jump& j : jumps) {
        const double w_lo = std::max(a_lo, j.lo - step), w_hi = std::min(a_hi, j.hi + step);
        const RandomMap1D at = family.with_parameter(w_lo);
        std::vector<double> ends;
        for (const auto* s : {&rep.points[j.index - 1].support, &rep.points[j.index].support}) {
          for (const Interval& c : *s) {
            ends.push_back(family.space().wrap(c.lo));
            ends.push_back(family.space().wrap(c.hi));
          }
        }
        DetectorOptions hopt = dopt;
        hopt.coarse_steps = 40;
        for (const auto& o : find_extremal_orbits(at, options.k_max)) {
          if (o.stability != Stability::Attracting && o.stability != Stability::Repelling) continue;
          bool near = false;
          for (double pt : o.points) {
            for (double e : ends) near = near || family.space().distance(pt, e) < 1e-2;
          }
          if (!near) continue;
          add("homoclinic detector", [&] {
            return detect_homoclinic(family, w_lo, w_hi, o, options.l_max, options.resolution, hopt);
          });
        }
      }
    }
  }
  detected = dedupe(std::move(detected), options.resolution);

  for (auto& d : detected) {
    Jump* host = nullptr;
    for (auto& j : jumps) {
      if (d.a_star >= j.lo - step && d.a_star <= j.hi + step) host = &j;
    }
    if (host && host->event.type == EventType::SupportJump) {
      BifurcationEvent merged = d;
      merged.label = host->event.label;
      merged.evidence.hausdorff_jump = host->event.evidence.hausdorff_jump;
      merged.evidence.summary += "; " + host->event.evidence.summary;
      host->event = std::move(merged);
    } else if (host) {
      host->event.notes.push_back(std::string("also ") + to_string(d.type) + ": " + d.evidence.summary);
    } else {
      d.label = label_at(flank(d.a_star));
      rep.events.push_back(std::move(d));
    }
  }
  for (auto& j : jumps) rep.events.push_back(std::move(j.event));
  std::sort(rep.events.begin(), rep.events.end(),
            [](const BifurcationEvent& x, const BifurcationEvent& y) { return x.a_star < y.a_star; });
  return rep;
}

}  // namespace rds
