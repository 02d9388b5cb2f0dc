#include "rds/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rds/kernel.hpp"
#include "rds/parallel.hpp"
#include "rds/quadrature.hpp"

namespace rds {

Grid::Grid(PhaseSpace space, std::size_t n_cells) : space_(space), n_(n_cells) {
  if (n_cells < 2) throw Error(ErrorKind::InvalidParameter, "grid needs at least 2 cells");
  width_ = space_.length() / static_cast<double>(n_cells);
}

std::size_t Grid::cell_of(double x) const {
  const double t = (space_.wrap(x) - space_.lower()) / width_;
  if (t <= 0.0) return 0;
  const auto i = static_cast<std::size_t>(t);
  if (i >= n_) return space_.is_circle() ? i % n_ : n_ - 1;
  return i;
}

UlamMatrix::UlamMatrix(Grid grid, std::vector<std::size_t> cells, std::vector<double> entries, bool windowed)
    : grid_(std::move(grid)), cells_(std::move(cells)), entries_(std::move(entries)), windowed_(windowed) {
  if (entries_.size() != cells_.size() * cells_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "entries do not form a square matrix over the cells");
  }
  index_bands();
}

UlamMatrix UlamMatrix::from_rows(Grid grid, const std::vector<std::vector<double>>& rows) {
  const std::size_t n = grid.size();
  if (rows.size() != n) throw Error(ErrorKind::DimensionMismatch, "row count differs from grid size");
  std::vector<double> entries;
  entries.reserve(n * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw Error(ErrorKind::DimensionMismatch, "ragged rows");
    entries.insert(entries.end(), r.begin(), r.end());
  }
  std::vector<std::size_t> cells(n);
  for (std::size_t i = 0; i < n; ++i) cells[i] = i;
  return UlamMatrix(std::move(grid), std::move(cells), std::move(entries), false);
}

void UlamMatrix::index_bands() {
  const std::size_t n = size();
  band_offsets_.assign(n + 1, 0);
  bands_.clear();
  for (std::size_t r = 0; r < n; ++r) {
    const double* p = entries_.data() + r * n;
    std::size_t c = 0;
    while (c < n) {
      while (c < n && p[c] == 0.0) ++c;
      if (c == n) break;
      const std::size_t begin = c;
      // Short zero gaps stay inside a band; they cost less than an extra run.
      std::size_t end = c;
      while (c < n) {
        if (p[c] != 0.0) {
          end = ++c;
        } else {
          std::size_t z = c;
          while (z < n && p[z] == 0.0) ++z;
          if (z < n && z - c <= 8) c = z; else break;
        }
      }
      bands_.emplace_back(begin, end);
    }
    band_offsets_[r + 1] = bands_.size();
  }
}

double UlamMatrix::row_sum(std::size_t r) const {
  double s = 0.0;
  for (double v : row(r)) s += v;
  return s;
}

void UlamMatrix::left_multiply(std::span<const double> v, std::span<double> out) const {
  const std::size_t n = size();
  if (v.size() != n || out.size() != n) throw Error(ErrorKind::DimensionMismatch, "vector length differs from matrix size");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double vr = v[r];
    if (vr == 0.0) continue;
    const double* p = entries_.data() + r * n;
    for (std::size_t b = band_offsets_[r]; b < band_offsets_[r + 1]; ++b) {
      const auto [begin, end] = bands_[b];
      for (std::size_t c = begin; c < end; ++c) out[c] += vr * p[c];
    }
  }
}

namespace {

// Probability mass that a start point x sends into each grid cell. The inner
// integral is exact: cell edges are pulled back through the noise CDF.
struct RowAccumulator {
  const RandomMap1D& map;
  const Grid& grid;
  std::vector<double> mass;             // indexed by grid cell
  std::vector<std::size_t> touched;
  double drift = 0.0;
  double lost = 0.0;  // mass beyond the ends of an interval phase space

  RowAccumulator(const RandomMap1D& m, const Grid& g) : map(m), grid(g), mass(g.size(), 0.0) {}

  void add_point(double x, double weight, double origin_mid) {
    check_fiber(map, x);
    const auto [lo, hi] = image_bounds(map, x);
    const int orient = map.noise_orientation(x) >= 0 ? 1 : -1;
    const NoiseModel& noise = map.noise();
    auto law = [&](double t) {
      const double g = noise.cdf(map.invert_noise(x, t));
      return orient > 0 ? g : 1.0 - g;
    };
    const double lower = grid.space().lower();
    const double h = grid.width();
    const auto n = static_cast<long long>(grid.size());
    const bool circle = grid.space().is_circle();
    const long long first = static_cast<long long>(std::floor((lo - lower) / h));
    const long long last = static_cast<long long>(std::floor((hi - lower) / h));
    double prev = 0.0;
    for (long long cell = first; cell <= last; ++cell) {
      const double right = lower + h * static_cast<double>(cell + 1);
      const double cur = right >= hi ? 1.0 : law(right);
      const double p = cur - prev;
      prev = cur;
      if (p <= 0.0) continue;
      long long j = cell;
      if (circle) {
        j = ((cell % n) + n) % n;
        drift += weight * p * (lower + h * (static_cast<double>(cell) + 0.5) - origin_mid);
      } else if (cell < 0 || cell >= n) {
        lost += weight * p;
        continue;
      }
      const auto ju = static_cast<std::size_t>(j);
      if (mass[ju] == 0.0) touched.push_back(ju);
      mass[ju] += weight * p;
    }
  }

  void reset() {
    for (std::size_t j : touched) mass[j] = 0.0;
    touched.clear();
    drift = 0.0;
    lost = 0.0;
  }
};

UlamMatrix build_rows(const RandomMap1D& map, const Grid& grid, const std::vector<std::size_t>& cells,
                      bool windowed, std::size_t q) {
  if (q < 1) throw Error(ErrorKind::InvalidParameter, "quadrature order must be >= 1");
  if (map.deterministic()) throw Error(ErrorKind::DegenerateFiber, "deterministic map has no transition density");
  const GaussRule rule = gauss_legendre(q);
  const std::size_t rows = cells.size();
  std::vector<long long> column_of(grid.size(), -1);
  for (std::size_t c = 0; c < rows; ++c) column_of[cells[c]] = static_cast<long long>(c);

  std::vector<double> entries(rows * rows, 0.0);
  std::vector<double> drift(rows, 0.0);
  std::vector<double> leak(rows, 0.0);
  const std::size_t workers = std::min(thread_count(), rows);
  const std::size_t chunk = (rows + workers - 1) / std::max<std::size_t>(workers, 1);
  parallel_for(workers, [&](std::size_t t) {
    RowAccumulator acc(map, grid);
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(rows, begin + chunk);
    for (std::size_t r = begin; r < end; ++r) {
      const std::size_t i = cells[r];
      const double left = grid.edge(i);
      const double mid = grid.mid(i);
      for (std::size_t k = 0; k < q; ++k) {
        const double x = left + 0.5 * grid.width() * (1.0 + rule.nodes[k]);
        acc.add_point(x, 0.5 * rule.weights[k], mid);
      }
      double* out = entries.data() + r * rows;
      double gone = acc.lost;
      for (std::size_t j : acc.touched) {
        const long long c = column_of[j];
        if (c >= 0) out[c] = acc.mass[j];
        else gone += acc.mass[j];
      }
      leak[r] = gone;
      drift[r] = acc.drift;
      acc.reset();
    }
  });

  UlamMatrix m(grid, cells, std::move(entries), windowed);
  if (grid.space().is_circle() && !windowed) m.set_row_drift(std::move(drift));
  if (windowed) m.set_row_leak(std::move(leak));
  return m;
}

}  // namespace

UlamMatrix build_ulam(const RandomMap1D& map, const Grid& grid, std::size_t quadrature_order) {
  std::vector<std::size_t> cells(grid.size());
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
  UlamMatrix m = build_rows(map, grid, cells, false, quadrature_order);

  // Mass leaving an interval phase space is re-conditioned onto the row.
  std::size_t renormalized = 0;
  double worst = 0.0;
  std::vector<double> rescaled;
  for (std::size_t r = 0; r < m.size(); ++r) {
    const double s = m.row_sum(r);
    if (std::abs(s - 1.0) > 1e-8) {
      ++renormalized;
      worst = std::max(worst, std::abs(s - 1.0));
    }
  }
  if (renormalized == 0) return m;

  std::vector<double> entries(m.size() * m.size());
  for (std::size_t r = 0; r < m.size(); ++r) {
    const double s = m.row_sum(r);
    const bool fix = std::abs(s - 1.0) > 1e-8 && s > 0.0;
    for (std::size_t c = 0; c < m.size(); ++c) entries[r * m.size() + c] = fix ? m(r, c) / s : m(r, c);
  }
  UlamMatrix fixed(grid, m.cells(), std::move(entries), false);
  fixed.set_row_drift(m.row_drift());
  std::ostringstream os;
  os << "renormalized " << renormalized << " rows (max residual " << worst << ")";
  fixed.add_note(os.str());
  return fixed;
}

std::vector<std::size_t> window_cells(const Grid& grid, const std::vector<Interval>& window) {
  std::vector<char> in(grid.size(), 0);
  const double lower = grid.space().lower();
  const double h = grid.width();
  const auto n = static_cast<long long>(grid.size());
  for (const Interval& w : window) {
    if (!(w.hi > w.lo)) continue;
    // Outward snapping; the 1e-9 slack keeps edges that are exact multiples of h.
    const auto first = static_cast<long long>(std::floor((w.lo - lower) / h + 1e-9));
    const auto last = static_cast<long long>(std::ceil((w.hi - lower) / h - 1e-9));
    if (grid.space().is_circle() && last - first >= n) {
      std::fill(in.begin(), in.end(), 1);
      continue;
    }
    for (long long c = first; c < last; ++c) {
      long long j = c;
      if (grid.space().is_circle()) j = ((c % n) + n) % n;
      else if (c < 0 || c >= n) continue;
      in[static_cast<std::size_t>(j)] = 1;
    }
  }
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i]) cells.push_back(i);
  }
  return cells;
}

UlamMatrix build_windowed(const RandomMap1D& map, const Grid& grid, const std::vector<Interval>& window,
                          std::size_t quadrature_order) {
  std::vector<std::size_t> cells = window_cells(grid, window);
  if (cells.empty()) throw Error(ErrorKind::EmptyWindow, "window covers no grid cell");
  return build_rows(map, grid, cells, true, quadrature_order);
}

std::vector<double> apply(const UlamMatrix& m, std::span<const double> phi) {
  if (phi.size() != m.size()) throw Error(ErrorKind::DimensionMismatch, "density length differs from matrix size");
  // Uniform grid: the |cell_i| / |cell_j| factors cancel.
  std::vector<double> out(m.size());
  m.left_multiply(phi, out);
  return out;
}

}  // namespace rds
