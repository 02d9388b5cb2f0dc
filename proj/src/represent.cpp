#include "rds/represent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rds/error.hpp"
#include "rds/kernel.hpp"
#include "rds/quadrature.hpp"

namespace rds {

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kUnboundedRatio = 1e6;

Interval single_support(const KernelProvider& kernel, double x) {
  const auto parts = kernel.support(x);
  if (parts.size() != 1) {
    std::ostringstream os;
    os << parts.size() << " support components at x = " << x;
    throw Error(ErrorKind::MulticomponentSupport, os.str());
  }
  if (!(parts[0].hi > parts[0].lo)) throw Error(ErrorKind::InvalidParameter, "empty kernel support");
  return parts[0];
}

double panel_integral(const KernelProvider& kernel, double x, double lo, double hi, const GaussRule& rule) {
  const double c = 0.5 * (lo + hi);
  const double r = 0.5 * (hi - lo);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * kernel.density(x, c + r * rule.nodes[i]);
  return s * r;
}

double dx_density(const KernelProvider& kernel, double x, double y) {
  if (kernel.dx_density) return kernel.dx_density(x, y);
  return (kernel.density(x + kFdStep, y) - kernel.density(x - kFdStep, y)) / (2.0 * kFdStep);
}

// golden-section maximisation of the density on [lo, hi]
std::pair<double, double> golden_max(const KernelProvider& kernel, double x, double lo, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = kernel.density(x, c), fd = kernel.density(x, d);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    if (fc >= fd) {
      b = d; d = c; fd = fc;
      c = b - g * (b - a);
      fc = kernel.density(x, c);
    } else {
      a = c; c = d; fc = fd;
      d = a + g * (b - a);
      fd = kernel.density(x, d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

KernelProvider kernel_from_map(const RandomMap1D& map) {
  if (map.deterministic()) throw Error(ErrorKind::DegenerateFiber, "deterministic map has no density");
  KernelProvider k;
  k.name = "map";
  k.space = map.space();
  k.support = [map](double x) {
    const auto [lo, hi] = image_bounds(map, x);
    return std::vector<Interval>{{lo, hi}};
  };
  k.density = [map](double x, double y) {
    const auto [lo, hi] = image_bounds(map, x);
    if (y < lo || y > hi) return 0.0;
    const double w = map.invert_noise(x, y);
    return map.noise().density(w) / std::abs(map.dw(x, w));
  };
  return k;
}

KernelProvider uniform_additive_kernel(std::function<double(double)> F, double sigma, PhaseSpace space) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidParameter, "sigma must be > 0");
  KernelProvider k;
  k.name = "uniform-additive";
  k.space = space;
  k.support = [F, sigma](double x) {
    const double c = F(x);
    return std::vector<Interval>{{c - sigma, c + sigma}};
  };
  k.density = [F, sigma](double x, double y) {
    const double c = F(x);
    return (y >= c - sigma && y <= c + sigma) ? 0.5 / sigma : 0.0;
  };
  // flat inside, so the x-derivative vanishes off the edges
  k.dx_density = [](double, double) { return 0.0; };
  return k;
}

KernelProvider quadratic_noise_kernel() {
  KernelProvider k;
  k.name = "quadratic-noise";
  k.space = PhaseSpace::interval(-1.0, 1.0);
  k.support = [](double x) {
    const double lo = std::abs(x) < 1.0 ? 0.0 : std::min((x - 1.0) * (x - 1.0), (x + 1.0) * (x + 1.0));
    const double hi = (std::abs(x) + 1.0) * (std::abs(x) + 1.0);
    return std::vector<Interval>{{x + lo, x + hi}};
  };
  k.density = [](double x, double y) {
    const double d = y - x;
    if (d <= 0.0) return 0.0;
    const double u = std::sqrt(d);
    double s = 0.0;
    for (double w : {x - u, x + u})
      if (w >= -1.0 && w <= 1.0) s += 0.5 / (2.0 * u);
    return s;
  };
  return k;
}

DensityPeak density_peak(const KernelProvider& kernel, double x, std::size_t panels) {
  const Interval v = single_support(kernel, x);
  const double h = v.length() / static_cast<double>(panels);
  std::vector<std::pair<double, std::size_t>> mids;
  mids.reserve(panels);
  double mass = 0.0;
  for (std::size_t j = 0; j < panels; ++j) {
    const double d = kernel.density(x, v.lo + (j + 0.5) * h);
    mass += d * h;
    mids.push_back({d, j});
  }
  const std::size_t top = std::min<std::size_t>(4, panels);
  std::partial_sort(mids.begin(), mids.begin() + top, mids.end(), std::greater<>());
  DensityPeak peak;
  peak.mean = mass / v.length();
  peak.max = mids[0].first;
  peak.y = v.lo + (mids[0].second + 0.5) * h;
  auto zoom = [&](double lo, double hi) {
    const auto [y, d] = golden_max(kernel, x, std::max(lo, v.lo), std::min(hi, v.hi));
    if (d > peak.max) {
      peak.max = d;
      peak.y = y;
    }
  };
  for (std::size_t i = 0; i < top; ++i) {
    const double c = v.lo + (mids[i].second + 0.5) * h;
    zoom(c - h, c + h);
  }
  zoom(v.lo, v.lo + h);
  zoom(v.hi - h, v.hi);
  return peak;
}

RepresentationSlice::RepresentationSlice(double x, Interval support, std::vector<double> cumulative,
                                         std::vector<double> nodes)
    : x_(x), support_(support), mass_(cumulative.back()) {
  for (std::size_t j = 0; j < cumulative.size(); ++j) {
    const double c = cumulative[j] / mass_;
    if (!u_.empty() && c <= u_.back()) {
      // zero-mass panel: the quantile jumps over it
      if (j + 1 == cumulative.size()) y_.back() = nodes[j];
      continue;
    }
    u_.push_back(c);
    y_.push_back(nodes[j]);
  }
  u_.back() = 1.0;
  const std::size_t n = u_.size();
  if (n < 2) throw Error(ErrorKind::InvalidParameter, "degenerate cumulative");
  std::vector<double> s(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) s[i] = (y_[i + 1] - y_[i]) / (u_[i + 1] - u_[i]);
  d_.assign(n, 0.0);
  d_[0] = s[0];
  d_[n - 1] = s[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (s[i - 1] * s[i] <= 0.0) continue;
    const double h0 = u_[i] - u_[i - 1], h1 = u_[i + 1] - u_[i];
    const double w0 = 2.0 * h1 + h0, w1 = h1 + 2.0 * h0;
    d_[i] = (w0 + w1) / (w0 / s[i - 1] + w1 / s[i]);
  }
  if (n > 2) {
    // three-point end slopes, clipped to keep monotonicity
    auto end = [](double h0, double h1, double s0, double s1) {
      double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
      if (d * s0 <= 0.0) return 0.0;
      if (s0 * s1 <= 0.0 && std::abs(d) > 3.0 * std::abs(s0)) return 3.0 * s0;
      return d;
    };
    d_[0] = end(u_[1] - u_[0], u_[2] - u_[1], s[0], s[1]);
    d_[n - 1] = end(u_[n - 1] - u_[n - 2], u_[n - 2] - u_[n - 3], s[n - 2], s[n - 3]);
  }
}

double RepresentationSlice::quantile(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  const std::size_t n = u_.size();
  std::size_t i = std::upper_bound(u_.begin(), u_.end(), u) - u_.begin();
  i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
  const double h = u_[i + 1] - u_[i];
  const double t = (u - u_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * d_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
         (t3 - t2) * h * d_[i + 1];
}

double RepresentationSlice::inverse(double t) const {
  if (t <= support_.lo) return 0.0;
  if (t >= support_.hi) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 64; ++it) {
    const double mid = 0.5 * (lo + hi);
    (quantile(mid) <= t ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

RepresentationMap::RepresentationMap(KernelProvider kernel, NoiseModel noise, std::size_t panels)
    : kernel_(std::move(kernel)), noise_(noise), panels_(panels) {
  if (panels_ < 16) throw Error(ErrorKind::InvalidParameter, "panels must be >= 16");
  if (!kernel_.support || !kernel_.density) throw Error(ErrorKind::InvalidParameter, "kernel provider incomplete");
}

RepresentationSlice RepresentationMap::slice(double x) const {
  const Interval v = single_support(kernel_, x);
  const DensityPeak peak = density_peak(kernel_, x, panels_);
  if (!std::isfinite(peak.max) || peak.max > kUnboundedRatio * peak.mean) {
    std::ostringstream os;
    os << "density " << peak.max << " at y = " << peak.y << " exceeds 1e6 x mean " << peak.mean << " (x = " << x
       << ")";
    throw Error(ErrorKind::UnboundedKernel, os.str());
  }
  static const GaussRule rule = gauss_legendre(5);
  const double h = v.length() / static_cast<double>(panels_);
  std::vector<double> c(panels_ + 1, 0.0), y(panels_ + 1);
  y[0] = v.lo;
  for (std::size_t j = 0; j < panels_; ++j) {
    const double a = v.lo + j * h;
    y[j + 1] = j + 1 == panels_ ? v.hi : a + h;
    c[j + 1] = c[j] + panel_integral(kernel_, x, a, y[j + 1], rule);
  }
  if (!(c.back() > 0.0)) throw Error(ErrorKind::InvalidParameter, "kernel has zero mass");
  return RepresentationSlice(x, v, std::move(c), std::move(y));
}

double RepresentationMap::operator()(double x, double mu) const { return slice(x).quantile(noise_.cdf(mu)); }

double RepresentationMap::cdf(double x, double t) const { return slice(x).inverse(t); }

RepresentationMap represent_1d(const KernelProvider& kernel, NoiseModel noise, const std::vector<double>& probe_x) {
  RepresentationMap rep(kernel, noise);
  std::vector<double> xs = probe_x;
  if (xs.empty()) {
    const auto& s = kernel.space;
    for (int j = 0; j < 17; ++j) xs.push_back(s.lower() + s.length() * (j + 0.5) / 17.0);
  }
  for (double x : xs) rep.slice(x);
  return rep;
}

double representation_tv(const RepresentationMap& rep, double x, std::size_t bins) {
  const RepresentationSlice s = rep.slice(x);
  static const GaussRule rule = gauss_legendre(5);
  const Interval v = s.support();
  const double h = v.length() / static_cast<double>(bins);
  double tv = 0.0, prev = 0.0;
  for (std::size_t j = 0; j < bins; ++j) {
    const double a = v.lo + j * h;
    const double b = j + 1 == bins ? v.hi : a + h;
    const double k = panel_integral(rep.kernel(), x, a, b, rule) / s.mass();
    const double next = j + 1 == bins ? 1.0 : s.inverse(b);
    tv += std::abs(k - (next - prev));
    prev = next;
  }
  return 0.5 * tv;
}

std::vector<DiffeoVerdict> circle_diffeo_condition(const KernelProvider& kernel, const std::vector<double>& xs,
                                                   std::size_t z_points) {
  if (z_points < 2) throw Error(ErrorKind::InvalidParameter, "z_points must be >= 2");
  static const GaussRule rule = gauss_legendre(5);
  std::vector<DiffeoVerdict> out;
  out.reserve(xs.size());
  for (double x : xs) {
    DiffeoVerdict d;
    d.x = x;
    const Interval v = single_support(kernel, x);
    const double dl = (single_support(kernel, x + kFdStep).lo - single_support(kernel, x - kFdStep).lo) /
                      (2.0 * kFdStep);
    const double edge = kernel.density(x, v.lo + 1e-12 * std::max(1.0, std::abs(v.lo)));
    const double h = v.length() / static_cast<double>(z_points - 1);
    double e = -edge * dl;
    d.z.reserve(z_points);
    d.values.reserve(z_points);
    for (std::size_t j = 0; j < z_points; ++j) {
      const double z = j + 1 == z_points ? v.hi : v.lo + j * h;
      if (j > 0) {
        const double a = d.z.back();
        const double c = 0.5 * (a + z), r = 0.5 * (z - a);
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * dx_density(kernel, x, c + r * rule.nodes[i]);
        e += s * r;
      }
      d.z.push_back(z);
      d.values.push_back(e);
    }
    d.min_modulus = std::abs(d.values[0]);
    int sign = d.values[0] > 0.0 ? 1 : (d.values[0] < 0.0 ? -1 : 0);
    for (std::size_t j = 0; j < z_points; ++j) {
      const double val = d.values[j];
      d.min_modulus = std::min(d.min_modulus, std::abs(val));
      if (!d.holds) continue;
      if (std::abs(val) < 1e-8) {
        d.holds = false;
        d.witness = d.z[j];
      } else if (j > 0 && (val > 0.0) != (d.values[j - 1] > 0.0)) {
        const double p = d.values[j - 1];
        d.holds = false;
        d.witness = d.z[j - 1] + (d.z[j] - d.z[j - 1]) * p / (p - val);
      }
    }
    d.sign = d.holds ? sign : 0;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace rds
