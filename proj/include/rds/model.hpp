#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "rds/error.hpp"

namespace rds {

/// Closed interval [lo, hi]. On the circle a component may carry hi > 1,
/// meaning it wraps through 0 (lo stays in [0, 1)).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const Interval&) const = default;
};

enum class SpaceKind { Circle, Interval };

class PhaseSpace {
 public:
  static PhaseSpace circle() { return PhaseSpace(SpaceKind::Circle, 0.0, 1.0); }
  static PhaseSpace interval(double lower, double upper);

  SpaceKind kind() const { return kind_; }
  bool is_circle() const { return kind_ == SpaceKind::Circle; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double length() const { return upper_ - lower_; }

  /// Reduce a lift coordinate into the fundamental domain (identity on intervals).
  double wrap(double x) const;
  /// Circle distance lies in [0, 1/2]; interval distance is |x - y|.
  double distance(double x, double y) const;
  bool contains(double x) const;

 private:
  PhaseSpace(SpaceKind kind, double lower, double upper)
      : kind_(kind), lower_(lower), upper_(upper) {}

  SpaceKind kind_;
  double lower_;
  double upper_;
};

enum class NoiseKind { Uniform, SmoothBump };

/// Noise law on the fixed support [-1, 1].
class NoiseModel {
 public:
  explicit NoiseModel(NoiseKind kind = NoiseKind::Uniform) : kind_(kind) {}

  NoiseKind kind() const { return kind_; }
  double density(double w) const;
  double cdf(double w) const;
  double quantile(double u) const;
  template <class Engine>
  double sample(Engine& engine) const;

 private:
  NoiseKind kind_;
};

/// 64-bit seeded generator. Streams for independent tasks come from
/// `Rng::derive(seed, index)`; a fixed seed always replays the same draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static Rng derive(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed) ^ splitmix64(index + 0x9e3779b97f4a7c15ULL));
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

template <class Engine>
double NoiseModel::sample(Engine& engine) const {
  if (kind_ == NoiseKind::Uniform) return 2.0 * engine.uniform() - 1.0;
  // (15/16)(1 - w^2)^2 is the law of 2B - 1 with B ~ Beta(3, 3), i.e. the
  // median of five uniforms.
  double u[5];
  for (double& v : u) v = engine.uniform();
  std::sort(std::begin(u), std::end(u));
  return 2.0 * u[2] - 1.0;
}

// Built-in families. The sweep parameter is `a` except for AffineTest,
// where it is the offset `c`.
struct StandardCircle {
  double a = 0.0;
  double eps = 0.0;
  double sigma = 0.0;
};
struct Logistic {
  double a = 3.5;
  double sigma = 0.0;
};
struct AffineTest {
  double c = 0.0;
  double lambda = 0.0;
  double sigma = 0.0;
  double lower = 0.0;
  double upper = 1.0;
};
struct PureNoise {
  double sigma = 0.0;
};

/// Programmatic family for fixtures. Missing derivatives fall back to
/// central differences.
struct CustomFamily {
  std::string name = "custom";
  PhaseSpace space = PhaseSpace::circle();
  double a = 0.0;
  std::function<double(double x, double w, double a)> f;
  std::function<double(double x, double w, double a)> dfdx;
  std::function<double(double x, double w, double a)> dfdw;
  std::function<double(double x, double w, double a)> dfda;
  /// Critical point of x -> f(x; w) when the family is unimodal.
  std::optional<double> critical_point;
};

using FamilySpec = std::variant<StandardCircle, Logistic, AffineTest, PureNoise, CustomFamily>;

class RandomMap1D {
 public:
  RandomMap1D(FamilySpec family, NoiseModel noise);

  const FamilySpec& family() const { return family_; }
  const PhaseSpace& space() const { return space_; }
  const NoiseModel& noise() const { return noise_; }
  std::string describe() const;

  double parameter() const;
  /// Copy with the sweep parameter replaced; re-validated.
  RandomMap1D with_parameter(double a) const;

  /// f(x; w) in lift coordinates (not reduced modulo 1 on the circle).
  double lift(double x, double w) const;
  /// f(x; w) reduced into the phase space.
  double operator()(double x, double w) const { return space_.wrap(lift(x, w)); }
  double dx(double x, double w) const;
  double dw(double x, double w) const;
  double da(double x, double w) const;
  double dxx(double x, double w) const;

  /// True when f(x; w) = base(x) + slope(x) * w, so the noise inverts in closed form.
  bool affine_in_noise() const;
  /// Noise value w in [-1, 1] with lift(x, w) = y; clamped to the end points
  /// when y falls outside the image.
  double invert_noise(double x, double y) const;
  /// Sign of df/dw at x (+1 or -1); 0 for a deterministic (sigma = 0) map.
  int noise_orientation(double x) const;
  bool deterministic() const;
  std::optional<double> critical_point() const;

 private:
  FamilySpec family_;
  NoiseModel noise_;
  PhaseSpace space_;
};

/// Validates the descriptor: parameter ranges and strict monotonicity of
/// w -> f(x; w) on a 33 x 65 probe grid.
RandomMap1D make_map(const FamilySpec& family, NoiseKind noise = NoiseKind::Uniform);

struct OrbitSample {
  std::uint64_t seed = 0;
  std::vector<double> points;
  std::vector<double> draws;  // draws[0] is unused (the initial point has no draw)
};

OrbitSample sample_orbit(const RandomMap1D& map, double x0, std::size_t n, std::uint64_t seed);

}  // namespace rds
