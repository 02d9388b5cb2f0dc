#include "rds/escape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rds/parallel.hpp"
#include "rds/spectral.hpp"

namespace rds {

namespace {

std::vector<Interval> cell_runs(const Grid& grid, const std::vector<std::size_t>& cells) {
  std::vector<Interval> out;
  for (std::size_t i = 0; i < cells.size();) {
    std::size_t j = i + 1;
    while (j < cells.size() && cells[j] == cells[j - 1] + 1) ++j;
    out.push_back({grid.edge(cells[i]), grid.edge(cells[j - 1]) + grid.width()});
    i = j;
  }
  if (grid.space().is_circle() && out.size() > 1 && out.front().lo <= 0.0 && out.back().hi >= 1.0) {
    const Interval first = out.front();
    out.erase(out.begin());
    out.back().hi = 1.0 + first.hi;
  }
  return out;
}

struct LeakEstimate {
  double rate = 0.0;
  bool closed = false;
  bool converged = false;
  std::size_t iterations = 0;
};

// Cells that cannot reach a leaking cell form a closed class.
bool has_closed_class(const UlamMatrix& m) {
  const std::size_t n = m.size();
  const auto& leak = m.row_leak();
  std::vector<std::vector<std::size_t>> into(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < n; ++c)
      if (row[c] > 0.0) into[c].push_back(r);
  }
  std::vector<char> reach(n, 0);
  std::vector<std::size_t> stack;
  for (std::size_t r = 0; r < n; ++r)
    if (leak[r] > 0.0) reach[r] = 1, stack.push_back(r);
  while (!stack.empty()) {
    const std::size_t c = stack.back();
    stack.pop_back();
    for (std::size_t r : into[c])
      if (!reach[r]) reach[r] = 1, stack.push_back(r);
  }
  return std::find(reach.begin(), reach.end(), 0) != reach.end();
}

// Lazy power iteration v <- (v + v M) / 2 from the clipped QS vector. All
// terms are nonnegative, so tiny components keep their relative accuracy.
LeakEstimate leak_identity(const UlamMatrix& m, const std::vector<double>& qs) {
  LeakEstimate e;
  if (has_closed_class(m)) {
    e.closed = true;
    e.converged = true;
    return e;
  }
  const auto& leak = m.row_leak();
  const std::size_t n = m.size();
  const double top = *std::max_element(qs.begin(), qs.end());
  std::vector<double> v(n), w(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = top > 0.0 ? (qs[i] >= 1e-10 * top ? qs[i] : 0.0) : 1.0;
  auto rate_of = [&] {
    double mass = 0.0, out = 0.0;
    for (std::size_t i = 0; i < n; ++i) mass += v[i], out += v[i] * leak[i];
    for (double& x : v) x /= mass;
    return out / mass;
  };
  double rate = rate_of(), checkpoint = rate;
  constexpr std::size_t kMax = 200000;
  for (std::size_t it = 1; it <= kMax; ++it) {
    m.left_multiply(v, w);
    for (std::size_t i = 0; i < n; ++i) v[i] = 0.5 * (v[i] + w[i]);
    rate = rate_of();
    e.iterations = it;
    if (it % 10 == 0) {
      if (it >= 200 && std::abs(rate - checkpoint) <= 1e-13 * rate) {
        e.converged = true;
        break;
      }
      checkpoint = rate;
    }
  }
  e.rate = rate;
  return e;
}

}  // namespace

bool in_window(const PhaseSpace& space, const std::vector<Interval>& window, double x) {
  for (const Interval& w : window) {
    if (space.is_circle()) {
      if (w.hi - w.lo >= 1.0 || space.wrap(x - w.lo) <= w.hi - w.lo) return true;
    } else if (x >= w.lo && x <= w.hi) {
      return true;
    }
  }
  return false;
}

EscapeReport quasi_stationary(const RandomMap1D& map, const std::vector<Interval>& window, const Grid& grid,
                              std::size_t quadrature_order) {
  const UlamMatrix m = build_windowed(map, grid, window, quadrature_order);
  bool any = false;
  for (std::size_t r = 0; r < m.size() && !any; ++r) any = m.row_sum(r) > 0.0;
  if (!any) throw Error(ErrorKind::EmptyWindow, "windowed matrix is zero");
  const SpectralSet s = eigen(m, std::min<std::size_t>(8, m.size()), 1e-10);

  EscapeReport r;
  r.cells = m.cells();
  r.window = cell_runs(grid, r.cells);
  r.cell_width = grid.width();
  r.alpha = s.eigenvalues.front().real();
  // A window around p cycled components carries alpha * exp(2 pi i j / p)
  // as well; those rotate mass between components and are skipped.
  r.subdominant = 0.0;
  for (const cplx& z : s.eigenvalues) {
    if (std::abs(z) < r.alpha - 1e-10) r.subdominant = std::max(r.subdominant, std::abs(z));
  }
  r.notes = s.notes;
  if (r.alpha < 1e6 * s.tol) r.notes.push_back("alpha below the eigen-solver resolution: QS density unreliable");
  if (std::abs(s.eigenvalues.front().imag()) > 1e-12) r.notes.push_back("leading windowed eigenvalue is not real");

  const auto& v = s.eigenvectors.front();
  double total = 0.0, sign = 0.0;
  for (const cplx& z : v) sign += z.real();
  sign = sign < 0.0 ? -1.0 : 1.0;
  r.qs_density.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    r.qs_density[i] = std::max(0.0, sign * v[i].real());
    total += r.qs_density[i] * grid.width();
  }
  for (double& x : r.qs_density) x /= total;

  const LeakEstimate leak = leak_identity(m, r.qs_density);
  r.closed_class = leak.closed;
  r.leak_rate = leak.rate;
  r.leak_converged = leak.converged;
  r.expected_escape_leak = leak.closed || !(leak.rate > 0.0) ? std::numeric_limits<double>::infinity() : 1.0 / leak.rate;
  if (!leak.converged) {
    std::ostringstream os;
    os << "leak-identity iteration stopped after " << leak.iterations << " steps";
    r.notes.push_back(os.str());
  }

  r.absorbing = r.alpha >= 1.0 - 1e-12;
  r.expected_escape_spectral = r.absorbing ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - r.alpha);
  if (r.absorbing) r.notes.push_back("WindowAbsorbing: alpha = 1 within 1e-12, escape time infinite");
  if (r.alpha - r.subdominant <= 1e-3) {
    r.subdominant_close = true;
    std::ostringstream os;
    os << "subdominant windowed eigenvalue " << r.subdominant << " within 1e-3 of alpha";
    r.notes.push_back(os.str());
  }
  return r;
}

EscapeSample escape_time_mc(const RandomMap1D& map, const std::vector<Interval>& window, std::size_t n_trials,
                            std::size_t max_steps, std::uint64_t seed, EscapeStart start, const EscapeReport* qs) {
  if (n_trials < 100) throw Error(ErrorKind::InvalidParameter, "n_trials must be at least 100");
  if (max_steps < 1000) throw Error(ErrorKind::InvalidParameter, "max_steps must be at least 1000");
  if (window.empty()) throw Error(ErrorKind::EmptyWindow, "empty window");
  if (start == EscapeStart::QuasiStationary && (qs == nullptr || qs->qs_density.empty())) {
    throw Error(ErrorKind::InvalidParameter, "QS start needs a quasi-stationary report");
  }
  const PhaseSpace& space = map.space();

  // Start samplers: uniform over the window length, or QS cell by mass then uniform inside.
  std::vector<double> lengths;
  double window_length = 0.0;
  for (const Interval& w : window) {
    window_length += std::max(0.0, w.length());
    lengths.push_back(window_length);
  }
  if (!(window_length > 0.0)) throw Error(ErrorKind::EmptyWindow, "window has zero length");
  std::vector<double> qs_cdf;
  if (start == EscapeStart::QuasiStationary) {
    double acc = 0.0;
    for (double d : qs->qs_density) {
      acc += d;
      qs_cdf.push_back(acc);
    }
  }
  auto draw_start = [&](Rng& rng) {
    if (start == EscapeStart::QuasiStationary) {
      const double u = rng.uniform() * qs_cdf.back();
      const std::size_t c = std::min<std::size_t>(
          static_cast<std::size_t>(std::upper_bound(qs_cdf.begin(), qs_cdf.end(), u) - qs_cdf.begin()), qs_cdf.size() - 1);
      const double left = space.lower() + qs->cell_width * static_cast<double>(qs->cells[c]);
      return space.wrap(left + qs->cell_width * rng.uniform());
    }
    const double u = rng.uniform() * window_length;
    const std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(lengths.begin(), lengths.end(), u) - lengths.begin()), window.size() - 1);
    const double before = k == 0 ? 0.0 : lengths[k - 1];
    return space.wrap(window[k].lo + (u - before));
  };

  constexpr std::size_t kTail = 21;
  std::vector<std::size_t> chi(n_trials, 0);
  parallel_for(n_trials, [&](std::size_t t) {
    Rng rng = Rng::derive(seed, t);
    double x = draw_start(rng);
    std::size_t k = 0;
    while (k < max_steps) {
      x = map(x, map.noise().sample(rng));
      ++k;
      if (!in_window(space, window, x)) break;
    }
    chi[t] = (k == max_steps && in_window(space, window, x)) ? 0 : k;  // 0 marks censoring
  });

  EscapeSample out;
  out.trials = n_trials;
  double sum = 0.0, sumsq = 0.0;
  std::size_t done = 0;
  std::vector<std::size_t> beyond(kTail, 0);
  for (std::size_t c : chi) {
    if (c == 0) {
      ++out.censored;
      for (auto& b : beyond) ++b;
      continue;
    }
    ++done;
    sum += static_cast<double>(c);
    sumsq += static_cast<double>(c) * static_cast<double>(c);
    for (std::size_t k = 0; k < kTail && k < c; ++k) ++beyond[k];
  }
  if (done == 0) throw Error(ErrorKind::AllCensored, "every trial stayed in the window for max_steps iterates");
  out.mean = sum / static_cast<double>(done);
  const double var = done > 1 ? (sumsq - sum * out.mean) / static_cast<double>(done - 1) : 0.0;
  out.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(done));
  out.censoring_flag = static_cast<double>(out.censored) > 0.01 * static_cast<double>(n_trials);
  for (std::size_t b : beyond) out.survival.push_back(static_cast<double>(b) / static_cast<double>(n_trials));
  return out;
}

GrowthTable escape_growth_probe(const RandomMap1D& map, double a0, const std::vector<Interval>& window,
                                const std::vector<double>& offsets, const Grid& grid, int direction) {
  if (offsets.empty()) throw Error(ErrorKind::InvalidParameter, "no offsets");
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (!(offsets[i] > 0.0) || (i > 0 && !(offsets[i] < offsets[i - 1]))) {
      throw Error(ErrorKind::InvalidParameter, "offsets must be positive and decreasing");
    }
  }
  if (direction != 1 && direction != -1) throw Error(ErrorKind::InvalidParameter, "direction must be +1 or -1");
  GrowthTable t;
  for (double d : offsets) {
    GrowthRow row;
    row.offset = d;
    row.a = a0 + direction * d;
    const EscapeReport r = quasi_stationary(map.with_parameter(row.a), window, grid);
    row.alpha = r.alpha;
    row.escape_time = r.expected_escape_leak;
    row.absorbing = r.closed_class;
    row.alpha_saturated = r.absorbing && !r.closed_class;
    t.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    const auto& p = t.rows[i];
    const auto& q = t.rows[i + 1];
    if (!std::isfinite(p.escape_time) || !std::isfinite(q.escape_time)) {
      t.slopes.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      t.slopes.push_back(-(std::log(q.escape_time) - std::log(p.escape_time)) / (std::log(q.offset) - std::log(p.offset)));
    }
  }
  return t;
}

}  // namespace rds
