#include "rds/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <sstream>

namespace rds {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;

constexpr std::size_t kMaxMatvecs = 100000;

// Sort key: modulus bucketed at 1e-10 so ties fall through to the phase.
bool ordered_before(cplx a, cplx b) {
  const double ma = std::round(std::abs(a) * 1e10);
  const double mb = std::round(std::abs(b) * 1e10);
  if (ma != mb) return ma > mb;
  return phase(a) < phase(b);
}

std::vector<std::size_t> sorted_order(const Eigen::VectorXcd& values) {
  std::vector<std::size_t> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return ordered_before(values[i], values[j]); });
  return order;
}

std::size_t partner(const Eigen::VectorXcd& values, std::size_t i) {
  std::size_t best = i;
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (ju == i || values[j].imag() * values[i].imag() >= 0.0) continue;
    const double d = std::abs(values[j] - std::conj(values[i]));
    if (d < gap) {
      gap = d;
      best = ju;
    }
  }
  return best;
}

// Smallest len' >= len such that the first len' ordered values are closed
// under conjugation.
std::size_t closed_prefix(const Eigen::VectorXcd& values, const std::vector<std::size_t>& order, std::size_t len) {
  std::vector<std::size_t> pos(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) pos[order[p]] = p;
  bool grew = true;
  while (grew) {
    grew = false;
    for (std::size_t p = 0; p < len; ++p) {
      if (values[order[p]].imag() == 0.0) continue;
      const std::size_t q = pos[partner(values, order[p])];
      if (q >= len) {
        len = q + 1;
        grew = true;
      }
    }
  }
  return len;
}

class BlockKrylov {
 public:
  BlockKrylov(const UlamMatrix& m, std::size_t dim)
      : m_(m), n_(m.size()), v_(n_, dim), av_(n_, dim), rng_(0x5eed5eedULL) {}

  std::size_t size() const { return c_; }
  std::size_t matvecs() const { return matvecs_; }
  const Mat& v() const { return v_; }
  const Mat& av() const { return av_; }

  bool append(Vec w) {
    const double before = w.norm();
    if (!(before > 0.0)) return false;
    for (int pass = 0; pass < 2; ++pass) {
      const Vec h = v_.leftCols(c_).transpose() * w;
      w.noalias() -= v_.leftCols(c_) * h;
    }
    const double after = w.norm();
    if (!(after > 1e-12 * before)) return false;
    v_.col(c_) = w / after;
    m_.left_multiply(std::span<const double>(v_.col(c_).data(), n_), std::span<double>(av_.col(c_).data(), n_));
    ++matvecs_;
    ++c_;
    return true;
  }

  void append_random() {
    for (int attempt = 0; attempt < 16; ++attempt) {
      Vec w(n_);
      for (std::size_t i = 0; i < n_; ++i) w[i] = rng_.uniform() - 0.5;
      if (append(std::move(w))) return;
    }
    throw Error(ErrorKind::NoConvergence, "could not extend the search space");
  }

  // Replace the basis by V Q (Q orthonormal columns); AV follows without matvecs.
  void rotate(const Mat& q) {
    const auto keep = q.cols();
    const Mat nv = v_.leftCols(c_) * q;
    const Mat nav = av_.leftCols(c_) * q;
    v_.leftCols(keep) = nv;
    av_.leftCols(keep) = nav;
    c_ = static_cast<std::size_t>(keep);
  }

 private:
  const UlamMatrix& m_;
  std::size_t n_;
  Mat v_;
  Mat av_;
  std::size_t c_ = 0;
  std::size_t matvecs_ = 0;
  Rng rng_;
};

struct RawPairs {
  std::vector<cplx> values;
  std::vector<std::vector<cplx>> vectors;
  std::vector<double> residuals;
  std::size_t matvecs = 0;
  bool exhausted = false;
};

// Thick-restart block Krylov on M^T with Rayleigh-Ritz extraction.
RawPairs leading_pairs(const UlamMatrix& m, std::size_t k, double tol) {
  const std::size_t n = m.size();
  k = std::min(k, n);
  const std::size_t b = std::min<std::size_t>({k, 8, n});
  // A wide search space matters more than restart frequency here: the
  // subdominant spectrum of Ulam matrices is strongly non-normal.
  const std::size_t extra = 24;
  const std::size_t dim = std::min(n, std::max<std::size_t>(120, 3 * (k + extra) + 2 * b));
  BlockKrylov kr(m, dim);
  while (kr.size() < b) kr.append_random();

  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    while (kr.size() < dim) {
      if (!kr.append(kr.av().col(static_cast<Eigen::Index>(kr.size() - b)))) kr.append_random();
    }
    const auto c = static_cast<Eigen::Index>(kr.size());
    const Mat h = kr.v().leftCols(c).transpose() * kr.av().leftCols(c);
    Eigen::EigenSolver<Mat> es(h);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "projected eigenproblem failed");
    const Eigen::VectorXcd theta = es.eigenvalues();
    const CMat y = es.eigenvectors();
    const auto order = sorted_order(theta);

    const std::size_t want = closed_prefix(theta, order, std::min(k, kr.size()));
    const bool full = kr.size() == n;
    std::size_t keep = want;
    if (!full) keep = std::max(want, closed_prefix(theta, order, std::min(want + extra, kr.size() - b)));
    if (keep + b > kr.size() && !full) keep = want;

    CMat ys(c, static_cast<Eigen::Index>(keep));
    for (std::size_t p = 0; p < keep; ++p) ys.col(static_cast<Eigen::Index>(p)) = y.col(static_cast<Eigen::Index>(order[p]));
    const CMat x = kr.v().leftCols(c).cast<cplx>() * ys;
    const CMat ax = kr.av().leftCols(c).cast<cplx>() * ys;
    std::vector<double> res(keep);
    double worst = 0.0;
    for (std::size_t p = 0; p < keep; ++p) {
      const auto pc = static_cast<Eigen::Index>(p);
      res[p] = (ax.col(pc) - theta[static_cast<Eigen::Index>(order[p])] * x.col(pc)).norm() / x.col(pc).norm();
      if (p < want) worst = std::max(worst, res[p]);
    }
    best = std::min(best, worst);

    if (worst <= tol || full) {
      RawPairs out;
      out.exhausted = full && worst > tol;
      out.matvecs = kr.matvecs();
      for (std::size_t p = 0; p < want; ++p) {
        const auto pc = static_cast<Eigen::Index>(p);
        Eigen::VectorXcd v = x.col(pc);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        v *= std::conj(v[imax]) / std::abs(v[imax]);
        v /= v.norm();
        out.values.push_back(theta[static_cast<Eigen::Index>(order[p])]);
        out.vectors.emplace_back(v.data(), v.data() + v.size());
        out.residuals.push_back(res[p]);
      }
      return out;
    }
    if (kr.matvecs() > kMaxMatvecs) {
      std::ostringstream os;
      os << "iteration cap reached, best residual " << best;
      throw Error(ErrorKind::NoConvergence, os.str());
    }

    // Real basis of the kept Ritz space, least converged last so the next
    // block expands along their residuals.
    std::vector<std::pair<double, Vec>> cols;
    for (std::size_t p = 0; p < keep; ++p) {
      const cplx t = theta[static_cast<Eigen::Index>(order[p])];
      const Eigen::VectorXcd yc = y.col(static_cast<Eigen::Index>(order[p]));
      if (t.imag() == 0.0) {
        cols.emplace_back(res[p], yc.real());
      } else if (t.imag() > 0.0) {
        cols.emplace_back(res[p], yc.real());
        cols.emplace_back(res[p], yc.imag());
      }
    }
    std::stable_sort(cols.begin(), cols.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Mat yr(c, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) yr.col(static_cast<Eigen::Index>(j)) = cols[j].second;
    Eigen::HouseholderQR<Mat> qr(yr);
    const Mat q = qr.householderQ() * Mat::Identity(c, yr.cols());
    kr.rotate(q);
  }
}

}  // namespace

double phase(cplx z) {
  const double r = std::abs(z);
  if (std::abs(z.imag()) <= 1e-13 * r) return z.real() < 0.0 ? std::numbers::pi : 0.0;
  double t = std::atan2(z.imag(), z.real());
  if (t < 0.0) t += 2.0 * std::numbers::pi;
  return t;
}

SpectralSet eigen(const UlamMatrix& m, std::size_t k, double tol, double tol_unit) {
  if (k < 1 || k > 32) throw Error(ErrorKind::InvalidParameter, "k must lie in [1, 32]");
  if (!(tol > 0.0 && tol <= 1e-4)) throw Error(ErrorKind::InvalidParameter, "tol must lie in (0, 1e-4]");
  if (!(tol_unit > 0.0 && tol_unit <= 1e-2)) throw Error(ErrorKind::InvalidParameter, "tol_unit must lie in (0, 1e-2]");

  SpectralSet s;
  s.tol = tol;
  s.tol_unit = tol_unit;
  s.cell_width = m.grid().width();
  s.windowed = m.windowed();

  std::size_t kk = std::min(k, m.size());
  RawPairs raw;
  for (;;) {
    raw = leading_pairs(m, kk, tol);
    const bool below = std::any_of(raw.values.begin(), raw.values.end(),
                                   [&](cplx z) { return std::abs(z) < 1.0 - tol_unit; });
    if (below || kk >= m.size()) break;
    kk = std::min(m.size(), 2 * kk);
    s.notes.push_back("k raised to " + std::to_string(kk) + " to reach below the peripheral group");
  }
  if (raw.exhausted) s.notes.push_back("search space reached the full dimension before the residual target");

  s.eigenvalues = std::move(raw.values);
  s.eigenvectors = std::move(raw.vectors);
  s.residuals = std::move(raw.residuals);
  s.matvecs = raw.matvecs;
  s.eta = 0.0;
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    const cplx z = s.eigenvalues[i];
    if (std::abs(z - 1.0) <= tol_unit) ++s.unit_multiplicity;
    if (std::abs(z) >= 1.0 - tol_unit) s.peripheral.push_back(i);
    else s.eta = std::max(s.eta, std::abs(z));
  }
  if (!s.windowed && !s.eigenvalues.empty() && std::abs(s.eigenvalues.front()) > 1.0 + 1e-10) {
    s.notes.push_back("spectral radius exceeds 1 + 1e-10");
  }
  return s;
}

std::vector<std::vector<double>> stationary_densities(const SpectralSet& s) {
  if (s.windowed) throw Error(ErrorKind::InvalidParameter, "stationary densities need an unwindowed matrix");
  std::vector<std::size_t> unit;
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    if (std::abs(s.eigenvalues[i] - 1.0) <= s.tol_unit) unit.push_back(i);
  }
  const std::size_t m = unit.size();
  if (m == 0) throw Error(ErrorKind::InvalidParameter, "no eigenvalue within tol_unit of 1");
  const std::size_t n = s.eigenvectors[unit[0]].size();

  // Row u_i of the unit eigenspace basis. With disjoint ergodic supports each
  // row is a positive multiple of one fixed direction per measure.
  Mat u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t c = 0; c < m; ++c) {
    const auto& v = s.eigenvectors[unit[c]];
    // Sign normalization: the entry of largest magnitude is made positive.
    std::size_t imax = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(v[i].real()) > std::abs(v[imax].real())) imax = i;
    }
    const double sign = v[imax].real() < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = sign * v[i].real();
  }

  Mat coef(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  if (m == 1) {
    coef = u;
  } else {
    const Vec norms = u.rowwise().norm();
    const double top = norms.maxCoeff();
    std::vector<std::size_t> byweight(n);
    std::iota(byweight.begin(), byweight.end(), 0);
    std::stable_sort(byweight.begin(), byweight.end(), [&](std::size_t a, std::size_t b) {
      return norms[static_cast<Eigen::Index>(a)] > norms[static_cast<Eigen::Index>(b)];
    });
    std::vector<Vec> dirs;
    for (std::size_t i : byweight) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (norms[ii] < 1e-6 * top) break;
      const Vec r = u.row(ii).transpose() / norms[ii];
      double cos_best = -2.0;
      std::size_t which = 0;
      for (std::size_t d = 0; d < dirs.size(); ++d) {
        const double cs = r.dot(dirs[d].normalized());
        if (cs > cos_best) {
          cos_best = cs;
          which = d;
        }
      }
      if (cos_best >= 0.99) dirs[which] += norms[ii] * r;
      else dirs.push_back(norms[ii] * r);
    }
    if (dirs.size() != m) {
      std::ostringstream os;
      os << "unit eigenspace of dimension " << m << " splits into " << dirs.size() << " support directions";
      throw Error(ErrorKind::SupportOverlap, os.str());
    }
    Mat d(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t c = 0; c < m; ++c) d.col(static_cast<Eigen::Index>(c)) = dirs[c].normalized();
    const Eigen::ColPivHouseholderQR<Mat> qr(d);
    coef = (qr.solve(u.transpose())).transpose();
  }

  std::vector<std::vector<double>> out(m, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < m; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::max(0.0, coef(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
      out[c][i] = v;
      total += v * s.cell_width;
    }
    if (!(total > 0.0)) throw Error(ErrorKind::SupportOverlap, "stationary density with no positive part");
    for (double& v : out[c]) v /= total;
  }

  if (m > 1) {
    std::vector<double> peak(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) peak[c] = *std::max_element(out[c].begin(), out[c].end());
    std::size_t mixed = 0, occupied = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t hits = 0;
      for (std::size_t c = 0; c < m; ++c) hits += out[c][i] > 1e-6 * peak[c] ? 1 : 0;
      occupied += hits > 0 ? 1 : 0;
      mixed += hits > 1 ? 1 : 0;
    }
    if (static_cast<double>(mixed) > 0.01 * static_cast<double>(std::max<std::size_t>(occupied, 1))) {
      std::ostringstream os;
      os << mixed << " of " << occupied << " occupied cells carry more than one stationary density";
      throw Error(ErrorKind::SupportOverlap, os.str());
    }
    // Zero the numerical residue of other measures.
    for (std::size_t c = 0; c < m; ++c) {
      double total = 0.0;
      for (double& v : out[c]) {
        if (v <= 1e-12 * peak[c]) v = 0.0;
        total += v * s.cell_width;
      }
      for (double& v : out[c]) v /= total;
    }
    auto first = [](const std::vector<double>& d) {
      return static_cast<std::size_t>(std::find_if(d.begin(), d.end(), [](double v) { return v > 0.0; }) - d.begin());
    };
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return first(a) < first(b); });
  }
  return out;
}

std::vector<CycleInfo> cyclic_structure(const SpectralSet& s, const UlamMatrix& m,
                                        const std::vector<std::vector<double>>& densities,
                                        const std::vector<std::vector<Interval>>& supports) {
  if (m.windowed()) throw Error(ErrorKind::InvalidParameter, "cyclic structure needs an unwindowed matrix");
  if (densities.size() != supports.size() || densities.empty()) {
    throw Error(ErrorKind::DimensionMismatch, "one support list per density required");
  }
  const std::size_t n = m.size();
  const double h = m.grid().width();
  std::vector<CycleInfo> out;
  std::size_t expected_peripheral = 0;

  for (std::size_t k = 0; k < densities.size(); ++k) {
    const auto& phi = densities[k];
    if (phi.size() != n) throw Error(ErrorKind::DimensionMismatch, "density length differs from matrix size");
    const std::size_t nc = supports[k].size();
    if (nc == 0) throw Error(ErrorKind::InvalidParameter, "empty support");
    std::vector<long long> comp(n, -1);
    for (std::size_t a = 0; a < nc; ++a) {
      for (std::size_t cell : window_cells(m.grid(), {supports[k][a]})) comp[cell] = static_cast<long long>(a);
    }
    std::vector<std::vector<double>> flow(nc, std::vector<double>(nc, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      if (comp[i] < 0 || phi[i] <= 0.0) continue;
      const double w = phi[i] * h;
      const auto r = m.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (r[j] > 0.0 && comp[j] >= 0) flow[static_cast<std::size_t>(comp[i])][static_cast<std::size_t>(comp[j])] += w * r[j];
      }
    }

    std::vector<long long> level(nc, -1);
    level[0] = 0;
    std::queue<std::size_t> frontier;
    frontier.push(0);
    while (!frontier.empty()) {
      const std::size_t a = frontier.front();
      frontier.pop();
      for (std::size_t b = 0; b < nc; ++b) {
        if (flow[a][b] > 1e-9 && level[b] < 0) {
          level[b] = level[a] + 1;
          frontier.push(b);
        }
      }
    }
    long long g = 0;
    for (std::size_t a = 0; a < nc; ++a) {
      for (std::size_t b = 0; b < nc; ++b) {
        if (flow[a][b] > 1e-9 && level[a] >= 0 && level[b] >= 0) g = std::gcd(g, std::llabs(level[a] + 1 - level[b]));
      }
    }
    CycleInfo info;
    info.period = g > 0 ? static_cast<std::size_t>(g) : 1;
    info.levels.assign(info.period, {});
    for (std::size_t a = 0; a < nc; ++a) {
      if (level[a] >= 0) info.levels[static_cast<std::size_t>(level[a]) % info.period].push_back(a);
    }

    for (std::size_t j = 0; j < info.period; ++j) {
      const cplx root = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(info.period));
      const bool found = std::any_of(s.eigenvalues.begin(), s.eigenvalues.end(),
                                     [&](cplx z) { return std::abs(z - root) <= 1e-2; });
      if (!found) {
        std::ostringstream os;
        os << "component graph has period " << info.period << " but no computed eigenvalue lies near exp(2 pi i "
           << j << "/" << info.period << ")";
        throw Error(ErrorKind::CycleMismatch, os.str());
      }
    }
    expected_peripheral += info.period;
    out.push_back(std::move(info));
  }
  if (s.peripheral.size() > expected_peripheral) {
    std::ostringstream os;
    os << s.peripheral.size() << " peripheral eigenvalues but the component graphs account for " << expected_peripheral;
    throw Error(ErrorKind::CycleMismatch, os.str());
  }
  return out;
}

double decay_rate(const SpectralSet& s) { return s.eta; }

}  // namespace rds
