#include <doctest.h>

#include <cmath>

#include "rds/error.hpp"
#include "rds/model.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace rds;

TEST_CASE("phase space geometry") {
  const PhaseSpace c = PhaseSpace::circle();
  CHECK(c.distance(0.05, 0.95) == doctest::Approx(0.1));
  CHECK(c.wrap(-0.25) == doctest::Approx(0.75));
  CHECK_THROWS_AS(PhaseSpace::interval(1.0, 1.0), Error);
  rds::Rng r(11);
  for (int i = 0; i < 1000; ++i) {
    const double d = c.distance(gen::uniform(r, -3, 3), gen::uniform(r, -3, 3));
    CHECK(d >= 0.0);
    CHECK(d <= 0.5);
  }
}

TEST_CASE("noise densities integrate to one") {
  for (NoiseKind k : {NoiseKind::Uniform, NoiseKind::SmoothBump}) {
    const NoiseModel nu(k);
    const double mass = oracle::simpson([&](double w) { return nu.density(w); }, -1.0, 1.0, 1e-15);
    CHECK(std::abs(mass - 1.0) < 1e-12);
    CHECK(nu.density(1.5) == 0.0);
    CHECK(nu.density(-1.01) == 0.0);
    for (double u : {0.01, 0.3, 0.5, 0.77, 0.99}) CHECK(nu.cdf(nu.quantile(u)) == doctest::Approx(u).epsilon(1e-12));
  }
  CHECK(NoiseModel(NoiseKind::Uniform).density(0.3) == 0.5);
  CHECK(NoiseModel(NoiseKind::SmoothBump).density(0.5) == doctest::Approx(15.0 / 16.0 * 0.75 * 0.75));
}

TEST_CASE("smooth bump sampler matches its law") {
  // median of five uniforms: compare the empirical CDF with the closed form
  const NoiseModel nu(NoiseKind::SmoothBump);
  rds::Rng r(3);
  const int n = 200000;
  int below = 0;
  for (int i = 0; i < n; ++i) below += nu.sample(r) <= 0.4;
  const double p = oracle::simpson([&](double w) { return 15.0 / 16.0 * (1 - w * w) * (1 - w * w); }, -1.0, 0.4, 1e-14);
  CHECK(std::abs(below / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("make_map validation") {
  CHECK_NOTHROW(make_map(Logistic{3.85, 0.005}));
  CHECK_THROWS_WITH_AS(make_map(Logistic{3.999, 0.005}), doctest::Contains("(1, 4)"), Error);
  CHECK_NOTHROW(make_map(StandardCircle{0.05, 0.9, 0.05}));
  CHECK_THROWS_AS(make_map(StandardCircle{0.05, 1.0, 0.05}), Error);
  CHECK_THROWS_AS(make_map(StandardCircle{0.05, 0.9, -0.1}), Error);
  CHECK_THROWS_AS(make_map(StandardCircle{NAN, 0.9, 0.1}), Error);
  try {
    make_map(Logistic{3.999, 0.005});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidParameter);
  }
  // fibre folds: f(x; w) = x + w^2 is not injective in w
  CustomFamily fold;
  fold.f = [](double x, double w, double) { return x + 0.1 * w * w; };
  CHECK_THROWS_AS(make_map(fold), Error);
}

TEST_CASE("sample_orbit examples") {
  const auto id = sample_orbit(make_map(PureNoise{0.0}), 0.3, 5, 1);
  REQUIRE(id.points.size() == 5);
  for (double p : id.points) CHECK(p == 0.3);
  const auto rot = sample_orbit(make_map(StandardCircle{0.0, 0.0, 0.0}), 0.1, 3, 1);
  for (double p : rot.points) CHECK(p == doctest::Approx(0.1));
  const auto lg = sample_orbit(make_map(Logistic{3.85, 0.005}), 0.5, 10000, 7);
  for (double p : lg.points) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("property: orbit replay, seeds and invariance") {
  for (const auto& c : gen::cases(40, 101, gen::any_map)) {
    INFO(c.label);
    const RandomMap1D map = c.make();
    const double x0 = map.space().lower() + 0.37 * map.space().length();
    const auto s = sample_orbit(map, x0, 500, 42);
    const auto t = sample_orbit(map, x0, 500, 42);
    const auto u = sample_orbit(map, x0, 500, 43);
    CHECK(s.points == t.points);
    CHECK(s.draws != u.draws);
    for (std::size_t k = 0; k + 1 < s.points.size(); ++k) {
      CHECK(map(s.points[k], s.draws[k + 1]) == s.points[k + 1]);
      CHECK(map.space().contains(s.points[k + 1]));
      CHECK(std::abs(s.draws[k + 1]) <= 1.0);
    }
  }
}

TEST_CASE("property: w-monotonicity of validated maps") {
  for (const auto& c : gen::cases(40, 202, gen::any_map)) {
    INFO(c.label);
    const RandomMap1D map = c.make();
    rds::Rng r(5);
    for (int i = 0; i < 50; ++i) {
      const double x = map.space().lower() + (0.01 + 0.98 * r.uniform()) * map.space().length();
      const double w0 = gen::uniform(r, -1, 1), w1 = gen::uniform(r, -1, 1);
      if (w0 == w1) continue;
      const double d = (map.lift(x, w1) - map.lift(x, w0)) * (w1 - w0);
      CHECK(d > 0.0);
    }
  }
}
