#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rds/model.hpp"

namespace rds {

/// Uniform partition of the phase space. On the circle cell n-1 abuts cell 0.
class Grid {
 public:
  Grid(PhaseSpace space, std::size_t n_cells);

  const PhaseSpace& space() const { return space_; }
  std::size_t size() const { return n_; }
  double width() const { return width_; }
  double edge(std::size_t i) const { return space_.lower() + width_ * static_cast<double>(i); }
  double mid(std::size_t i) const { return edge(i) + 0.5 * width_; }
  /// Cell containing x (wrapped on the circle, clamped on intervals).
  std::size_t cell_of(double x) const;

 private:
  PhaseSpace space_;
  std::size_t n_;
  double width_;
};

/// Cell-to-cell transition probabilities, stored densely.
///
/// Row r and column c both refer to grid cell `cells()[r]` / `cells()[c]`;
/// for an unwindowed matrix that is the identity map over the grid, for a
/// windowed one it lists the window's cells in increasing order.
///
/// Densities are pushed forward from the left: phi' = phi^T M (scaled by the
/// cell-width ratio, which is 1 on a uniform grid).
class UlamMatrix {
 public:
  UlamMatrix(Grid grid, std::vector<std::size_t> cells, std::vector<double> entries, bool windowed);

  /// Unwindowed matrix from explicit rows (fixtures, block constructions).
  static UlamMatrix from_rows(Grid grid, const std::vector<std::vector<double>>& rows);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return cells_.size(); }
  const std::vector<std::size_t>& cells() const { return cells_; }
  bool windowed() const { return windowed_; }

  double operator()(std::size_t r, std::size_t c) const { return entries_[r * size() + c]; }
  std::span<const double> row(std::size_t r) const {
    return {entries_.data() + r * size(), size()};
  }
  double row_sum(std::size_t r) const;

  /// out = v^T M. Skips the zero part of each row.
  void left_multiply(std::span<const double> v, std::span<double> out) const;

  /// Mean lift displacement of a point uniform in the row cell, measured
  /// between cell midpoints (circle maps built by build_ulam; empty otherwise).
  const std::vector<double>& row_drift() const { return row_drift_; }
  void set_row_drift(std::vector<double> drift) { row_drift_ = std::move(drift); }

  /// Windowed matrices: mass each row sends outside the window, summed from
  /// the positive pieces that leave (exactly 0 when the image stays inside).
  const std::vector<double>& row_leak() const { return row_leak_; }
  void set_row_leak(std::vector<double> leak) { row_leak_ = std::move(leak); }

  const std::vector<std::string>& notes() const { return notes_; }
  void add_note(std::string note) { notes_.push_back(std::move(note)); }

 private:
  void index_bands();

  Grid grid_;
  std::vector<std::size_t> cells_;
  std::vector<double> entries_;
  bool windowed_;
  // Nonzero column runs per row, flattened: [band_offsets_[r], band_offsets_[r+1]).
  std::vector<std::size_t> band_offsets_;
  std::vector<std::pair<std::size_t, std::size_t>> bands_;
  std::vector<double> row_drift_;
  std::vector<double> row_leak_;
  std::vector<std::string> notes_;
};

UlamMatrix build_ulam(const RandomMap1D& map, const Grid& grid, std::size_t quadrature_order = 5);

/// Grid cells covered by the union of intervals, snapped outward.
std::vector<std::size_t> window_cells(const Grid& grid, const std::vector<Interval>& window);

/// 1_W L restricted to the window's cells; target mass outside W is dropped.
UlamMatrix build_windowed(const RandomMap1D& map, const Grid& grid, const std::vector<Interval>& window,
                          std::size_t quadrature_order = 5);

/// Density pushforward: out_j = sum_i phi_i |cell_i| M[i][j] / |cell_j|.
std::vector<double> apply(const UlamMatrix& m, std::span<const double> phi);

}  // namespace rds
