#pragma once

// Independent reference computations. Nothing here calls the library's
// quadrature, Ulam builder or eigen-solver.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "rds/model.hpp"
#include "rds/transfer.hpp"

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;

inline Eigen::MatrixXd dense(const rds::UlamMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) a(r, c) = m(r, c);
  return a;
}

/// Full spectrum of M (left and right spectra coincide), sorted by modulus.
inline std::vector<cplx> dense_spectrum(const rds::UlamMatrix& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(dense(m).transpose(), false);
  std::vector<cplx> ev(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
  return ev;
}

struct ConditionedEigenvalue {
  cplx value;
  /// |x| |y| / |y^T x| from right (x) and left (y) eigenvectors; y solves A^T y = lambda y,
  /// so the pairing has no conjugate.
  double condition = 0.0;
};

/// Spectrum with eigenvalue condition numbers, sorted by modulus.
inline std::vector<ConditionedEigenvalue> dense_conditioned(const rds::UlamMatrix& m) {
  const Eigen::MatrixXd a = dense(m);
  Eigen::EigenSolver<Eigen::MatrixXd> right(a, true);
  Eigen::EigenSolver<Eigen::MatrixXd> left(a.transpose(), true);
  const auto n = a.rows();
  std::vector<ConditionedEigenvalue> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx z = right.eigenvalues()(i);
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < n; ++j)
      if (std::abs(left.eigenvalues()(j) - z) < std::abs(left.eigenvalues()(best) - z)) best = j;
    const Eigen::VectorXcd x = right.eigenvectors().col(i);
    const Eigen::VectorXcd y = left.eigenvectors().col(best);
    const double overlap = std::abs(y.cwiseProduct(x).sum());
    out.push_back({z, overlap > 0.0 ? x.norm() * y.norm() / overlap : INFINITY});
  }
  std::sort(out.begin(), out.end(),
            [](const ConditionedEigenvalue& p, const ConditionedEigenvalue& q) { return std::abs(p.value) > std::abs(q.value); });
  return out;
}

/// Stationary row vector p (p M = p, sum p = 1) from the dense null space.
inline std::vector<double> dense_stationary(const rds::UlamMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd a = dense(m).transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd p = a.fullPivLu().solve(b);
  return {p.data(), p.data() + n};
}

inline double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 40) {
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, int d) {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
          return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, d - 1) + rec(mid, hi, fmid, frm, fhi, right, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), depth);
}

/// Length of [lo, hi] ∩ [c0, c1] with all integer shifts of the cell on the circle.
inline double overlap(double lo, double hi, double c0, double c1, bool circle) {
  auto one = [&](double s) { return std::max(0.0, std::min(hi, c1 + s) - std::max(lo, c0 + s)); };
  if (!circle) return one(0.0);
  double sum = 0.0;
  for (double s = std::floor(lo) - 1.0; s <= std::ceil(hi) + 1.0; s += 1.0) sum += one(s);
  return sum;
}

/// Ulam entry for uniform noise and maps affine in w: mean over x in cell i of
/// |U_x ∩ cell j| / |U_x|, x-average by the composite midpoint rule.
inline double ulam_entry_uniform(const rds::RandomMap1D& map, const rds::Grid& grid, std::size_t i, std::size_t j,
                                 int samples = 4000) {
  double s = 0.0;
  for (int t = 0; t < samples; ++t) {
    const double x = grid.edge(i) + (t + 0.5) / samples * grid.width();
    double lo = map.lift(x, -1.0), hi = map.lift(x, 1.0);
    if (lo > hi) std::swap(lo, hi);
    s += overlap(lo, hi, grid.edge(j), grid.edge(j) + grid.width(), map.space().is_circle()) / (hi - lo);
  }
  return s / samples;
}

/// Fixed points of x + c + (eps / 2pi) sin 2pi x on the circle (lift shift 0).
inline std::vector<double> circle_fixed_points(double c, double eps) {
  const double s = -2.0 * kPi * c / eps;
  if (std::abs(s) > 1.0) return {};
  const double base = std::asin(s) / (2.0 * kPi);
  auto wrap = [](double x) { return x - std::floor(x); };
  std::vector<double> xs = {wrap(base), wrap(0.5 - base)};
  std::sort(xs.begin(), xs.end());
  if (std::abs(xs[1] - xs[0]) < 1e-14) xs.pop_back();
  return xs;
}

/// Deterministic logistic: does the orbit of c = 1/2 enter the gap between the
/// period-3 bands within n iterates (after a transient)?
inline bool logistic_leaves_bands(double a, long n = 2000000) {
  double x = 0.5;
  for (long k = 0; k < 2000; ++k) x = a * x * (1.0 - x);
  for (long k = 0; k < n; ++k) {
    x = a * x * (1.0 - x);
    if (x > 0.25 && x < 0.4) return true;
  }
  return false;
}

/// Interior crisis ending the deterministic period-3 window, by bisection on
/// the band-leaving test between a_in (bands) and a_out (merged).
inline double logistic_crisis(double a_in = 3.85, double a_out = 3.86, double tol = 1e-8) {
  while (a_out - a_in > tol) {
    const double mid = 0.5 * (a_in + a_out);
    (logistic_leaves_bands(mid) ? a_out : a_in) = mid;
  }
  return 0.5 * (a_in + a_out);
}

/// Total-variation-free comparison helper: sup norm of a - b.
inline double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace oracle
