#include "rds/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace rds {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double central_difference(const std::function<double(double)>& g, double t) {
  const double h = 1e-6 * std::max(1.0, std::abs(t));
  return (g(t + h) - g(t - h)) / (2.0 * h);
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::InvalidParameter, std::string(name) + " must be finite");
  }
}

void require_nonnegative_sigma(double sigma) {
  require_finite(sigma, "sigma");
  if (sigma < 0.0) throw Error(ErrorKind::InvalidParameter, "sigma must be >= 0");
}

PhaseSpace space_of(const FamilySpec& family) {
  return std::visit(overloaded{
                        [](const StandardCircle&) { return PhaseSpace::circle(); },
                        [](const Logistic&) { return PhaseSpace::interval(0.0, 1.0); },
                        [](const AffineTest& f) { return PhaseSpace::interval(f.lower, f.upper); },
                        [](const PureNoise&) { return PhaseSpace::circle(); },
                        [](const CustomFamily& f) { return f.space; },
                    },
                    family);
}

}  // namespace

PhaseSpace PhaseSpace::interval(double lower, double upper) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    throw Error(ErrorKind::InvalidParameter, "interval bounds must satisfy lower < upper");
  }
  return PhaseSpace(SpaceKind::Interval, lower, upper);
}

double PhaseSpace::wrap(double x) const {
  if (!is_circle()) return x;
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

double PhaseSpace::distance(double x, double y) const {
  if (!is_circle()) return std::abs(x - y);
  const double d = wrap(x - y);
  return std::min(d, 1.0 - d);
}

bool PhaseSpace::contains(double x) const {
  if (!std::isfinite(x)) return false;
  return is_circle() || (x >= lower_ && x <= upper_);
}

double NoiseModel::density(double w) const {
  if (w < -1.0 || w > 1.0) return 0.0;
  if (kind_ == NoiseKind::Uniform) return 0.5;
  const double s = 1.0 - w * w;
  return 15.0 / 16.0 * s * s;
}

double NoiseModel::cdf(double w) const {
  if (w <= -1.0) return 0.0;
  if (w >= 1.0) return 1.0;
  if (kind_ == NoiseKind::Uniform) return 0.5 * (w + 1.0);
  const double w2 = w * w;
  return 0.5 + 15.0 / 16.0 * w * (1.0 - 2.0 * w2 / 3.0 + w2 * w2 / 5.0);
}

double NoiseModel::quantile(double u) const {
  if (u <= 0.0) return -1.0;
  if (u >= 1.0) return 1.0;
  if (kind_ == NoiseKind::Uniform) return 2.0 * u - 1.0;
  double lo = -1.0, hi = 1.0;
  double w = 2.0 * u - 1.0;
  for (int it = 0; it < 100; ++it) {
    const double r = cdf(w) - u;
    if (r > 0.0) hi = w; else lo = w;
    const double d = density(w);
    double next = d > 0.0 ? w - r / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - w) < 1e-16) return next;
    w = next;
  }
  return w;
}

RandomMap1D::RandomMap1D(FamilySpec family, NoiseModel noise)
    : family_(std::move(family)), noise_(noise), space_(space_of(family_)) {}

std::string RandomMap1D::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const StandardCircle& f) {
                   os << "standard-circle(a=" << f.a << ", eps=" << f.eps << ", sigma=" << f.sigma << ")";
                 },
                 [&](const Logistic& f) { os << "logistic(a=" << f.a << ", sigma=" << f.sigma << ")"; },
                 [&](const AffineTest& f) {
                   os << "affine(c=" << f.c << ", lambda=" << f.lambda << ", sigma=" << f.sigma << ", ["
                      << f.lower << ", " << f.upper << "])";
                 },
                 [&](const PureNoise& f) { os << "pure-noise(sigma=" << f.sigma << ")"; },
                 [&](const CustomFamily& f) { os << f.name << "(a=" << f.a << ")"; },
             },
             family_);
  os << (noise_.kind() == NoiseKind::Uniform ? " uniform" : " smooth-bump");
  return os.str();
}

double RandomMap1D::parameter() const {
  return std::visit(overloaded{
                        [](const StandardCircle& f) { return f.a; },
                        [](const Logistic& f) { return f.a; },
                        [](const AffineTest& f) { return f.c; },
                        [](const PureNoise&) { return 0.0; },
                        [](const CustomFamily& f) { return f.a; },
                    },
                    family_);
}

RandomMap1D RandomMap1D::with_parameter(double a) const {
  FamilySpec next = family_;
  std::visit(overloaded{
                 [&](StandardCircle& f) { f.a = a; },
                 [&](Logistic& f) { f.a = a; },
                 [&](AffineTest& f) { f.c = a; },
                 [](PureNoise&) {},
                 [&](CustomFamily& f) { f.a = a; },
             },
             next);
  return make_map(next, noise_.kind());
}

double RandomMap1D::lift(double x, double w) const {
  return std::visit(overloaded{
                        [&](const StandardCircle& f) {
                          return x + f.a + f.sigma * w + f.eps / kTwoPi * std::sin(kTwoPi * x);
                        },
                        [&](const Logistic& f) { return (f.a + f.sigma * w) * x * (1.0 - x); },
                        [&](const AffineTest& f) { return f.c + f.lambda * x + f.sigma * w; },
                        [&](const PureNoise& f) { return x + f.sigma * w; },
                        [&](const CustomFamily& f) { return f.f(x, w, f.a); },
                    },
                    family_);
}

double RandomMap1D::dx(double x, double w) const {
  return std::visit(overloaded{
                        [&](const StandardCircle& f) { return 1.0 + f.eps * std::cos(kTwoPi * x); },
                        [&](const Logistic& f) { return (f.a + f.sigma * w) * (1.0 - 2.0 * x); },
                        [&](const AffineTest& f) { return f.lambda; },
                        [&](const PureNoise&) { return 1.0; },
                        [&](const CustomFamily& f) {
                          if (f.dfdx) return f.dfdx(x, w, f.a);
                          return central_difference([&](double t) { return f.f(t, w, f.a); }, x);
                        },
                    },
                    family_);
}

double RandomMap1D::dw(double x, double w) const {
  return std::visit(overloaded{
                        [&](const StandardCircle& f) { return f.sigma; },
                        [&](const Logistic& f) { return f.sigma * x * (1.0 - x); },
                        [&](const AffineTest& f) { return f.sigma; },
                        [&](const PureNoise& f) { return f.sigma; },
                        [&](const CustomFamily& f) {
                          if (f.dfdw) return f.dfdw(x, w, f.a);
                          return central_difference([&](double t) { return f.f(x, t, f.a); }, w);
                        },
                    },
                    family_);
}

double RandomMap1D::da(double x, double w) const {
  return std::visit(overloaded{
                        [&](const StandardCircle&) { return 1.0; },
                        [&](const Logistic&) { return x * (1.0 - x); },
                        [&](const AffineTest&) { return 1.0; },
                        [&](const PureNoise&) { return 0.0; },
                        [&](const CustomFamily& f) {
                          if (f.dfda) return f.dfda(x, w, f.a);
                          return central_difference([&](double t) { return f.f(x, w, t); }, f.a);
                        },
                    },
                    family_);
}

double RandomMap1D::dxx(double x, double w) const {
  return std::visit(overloaded{
                        [&](const StandardCircle& f) { return -kTwoPi * f.eps * std::sin(kTwoPi * x); },
                        [&](const Logistic& f) { return -2.0 * (f.a + f.sigma * w); },
                        [&](const AffineTest&) { return 0.0; },
                        [&](const PureNoise&) { return 0.0; },
                        [&](const CustomFamily&) {
                          return central_difference([&](double t) { return dx(t, w); }, x);
                        },
                    },
                    family_);
}

bool RandomMap1D::affine_in_noise() const {
  return !std::holds_alternative<CustomFamily>(family_);
}

bool RandomMap1D::deterministic() const {
  return std::visit(overloaded{
                        [](const StandardCircle& f) { return f.sigma == 0.0; },
                        [](const Logistic& f) { return f.sigma == 0.0; },
                        [](const AffineTest& f) { return f.sigma == 0.0; },
                        [](const PureNoise& f) { return f.sigma == 0.0; },
                        [](const CustomFamily&) { return false; },
                    },
                    family_);
}

int RandomMap1D::noise_orientation(double x) const {
  const double d = dw(x, 0.0);
  return d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
}

std::optional<double> RandomMap1D::critical_point() const {
  if (std::holds_alternative<Logistic>(family_)) return 0.5;
  if (const auto* c = std::get_if<CustomFamily>(&family_)) return c->critical_point;
  return std::nullopt;
}

double RandomMap1D::invert_noise(double x, double y) const {
  if (affine_in_noise()) {
    const double slope = dw(x, 0.0);
    if (slope == 0.0) return 0.0;
    return std::clamp((y - lift(x, 0.0)) / slope, -1.0, 1.0);
  }
  const int orient = noise_orientation(x) >= 0 ? 1 : -1;
  auto h = [&](double w) { return orient * (lift(x, w) - y); };
  if (h(-1.0) >= 0.0) return -1.0;
  if (h(1.0) <= 0.0) return 1.0;
  double lo = -1.0, hi = 1.0;
  double w = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double v = h(w);
    if (v == 0.0) return w;
    if (v > 0.0) hi = w; else lo = w;
    const double d = orient * dw(x, w);
    double next = d > 0.0 ? w - v / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    w = next;
  }
  return w;
}

RandomMap1D make_map(const FamilySpec& family, NoiseKind noise) {
  std::visit(overloaded{
                 [](const StandardCircle& f) {
                   require_finite(f.a, "a");
                   require_finite(f.eps, "eps");
                   require_nonnegative_sigma(f.sigma);
                   // eps = 0 is the rigid rotation, still a diffeomorphism.
                   if (f.eps < 0.0 || f.eps >= 1.0) {
                     throw Error(ErrorKind::InvalidParameter, "standard circle map needs eps in [0, 1)");
                   }
                 },
                 [](const Logistic& f) {
                   require_finite(f.a, "a");
                   require_nonnegative_sigma(f.sigma);
                   if (!(f.a - f.sigma > 1.0 && f.a + f.sigma < 4.0)) {
                     std::ostringstream os;
                     os.precision(17);
                     os << "logistic map needs a + sigma*w in (1, 4) for all w in [-1, 1]; got ["
                        << f.a - f.sigma << ", " << f.a + f.sigma << "]";
                     throw Error(ErrorKind::InvalidParameter, os.str());
                   }
                 },
                 [](const AffineTest& f) {
                   require_finite(f.c, "c");
                   require_finite(f.lambda, "lambda");
                   require_nonnegative_sigma(f.sigma);
                   (void)PhaseSpace::interval(f.lower, f.upper);
                 },
                 [](const PureNoise& f) { require_nonnegative_sigma(f.sigma); },
                 [](const CustomFamily& f) {
                   require_finite(f.a, "a");
                   if (!f.f) throw Error(ErrorKind::InvalidParameter, "custom family without map");
                 },
             },
             family);

  RandomMap1D map(family, NoiseModel(noise));
  if (map.deterministic()) return map;

  // Strict monotonicity of w -> f(x; w), checked on cell midpoints so the
  // logistic fixed ends x = 0, 1 (where every w agrees) are not probed.
  const PhaseSpace& space = map.space();
  constexpr int kXs = 33;
  constexpr int kWs = 65;
  for (int i = 0; i < kXs; ++i) {
    const double x = space.lower() + (i + 0.5) / kXs * space.length();
    int sign = 0;
    double prev = map.lift(x, -1.0);
    for (int j = 1; j < kWs; ++j) {
      const double w = -1.0 + 2.0 * j / (kWs - 1);
      const double cur = map.lift(x, w);
      const int s = cur > prev ? 1 : (cur < prev ? -1 : 0);
      if (s == 0 || (sign != 0 && s != sign)) {
        std::ostringstream os;
        os << "w -> f(x; w) is not strictly monotone at x = " << x;
        throw Error(ErrorKind::InvalidParameter, os.str());
      }
      sign = s;
      prev = cur;
    }
  }
  return map;
}

OrbitSample sample_orbit(const RandomMap1D& map, double x0, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidParameter, "orbit length must be >= 1");
  if (!map.space().contains(x0)) throw Error(ErrorKind::InvalidParameter, "x0 outside the phase space");
  OrbitSample out;
  out.seed = seed;
  out.points.resize(n);
  out.draws.assign(n, 0.0);
  Rng rng(seed);
  out.points[0] = map.space().wrap(x0);
  for (std::size_t k = 1; k < n; ++k) {
    out.draws[k] = map.noise().sample(rng);
    out.points[k] = map(out.points[k - 1], out.draws[k]);
  }
  return out;
}

}  // namespace rds
