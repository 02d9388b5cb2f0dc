#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rds/error.hpp"
#include "rds/spectral.hpp"
#include "rds/stationary.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace rds;

namespace {

bool covered(const PhaseSpace& space, const Interval& piece, const std::vector<Interval>& set, double slack) {
  if (space.is_circle() && piece.hi - piece.lo >= 1.0 - slack) {
    double total = 0.0;
    for (const auto& s : set) total += s.hi - s.lo;
    return total >= 1.0 - slack;
  }
  // sample the piece; every point must lie within slack of the set
  for (int k = 0; k <= 200; ++k) {
    const double x = piece.lo + (piece.hi - piece.lo) * k / 200.0;
    if (distance_to_set(space, space.is_circle() ? space.wrap(x) : x, set) > slack) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("density support examples") {
  const Grid g(PhaseSpace::interval(0.0, 1.0), 8);
  const std::vector<double> phi = {0, 0, 2, 3, 0, 0, 1, 0};
  const auto s = support_from_density(g, phi);
  REQUIRE(s.components.size() == 2);
  CHECK(s.components[0].lo == doctest::Approx(0.25));
  CHECK(s.components[0].hi == doctest::Approx(0.5));
  CHECK(s.components[1].lo == doctest::Approx(0.75));
  CHECK(s.components[1].hi == doctest::Approx(0.875));

  // a run through zero on the circle is one component with hi > 1
  const Grid c(PhaseSpace::circle(), 8);
  const std::vector<double> wrap = {1, 0, 0, 0, 0, 0, 0, 1};
  const auto w = support_from_density(c, wrap);
  REQUIRE(w.components.size() == 1);
  CHECK(w.components[0].lo == doctest::Approx(0.875));
  CHECK(w.components[0].hi == doctest::Approx(1.125));

  const auto sens = support_sensitivity(g, phi);
  CHECK(sens.size() == 5);
  for (const auto& t : sens) CHECK(t.components == 2);
}

TEST_CASE("hausdorff and distance examples") {
  const PhaseSpace c = PhaseSpace::circle();
  CHECK(hausdorff(c, {{0.1, 0.2}}, {{0.1, 0.2}}) == 0.0);
  CHECK(hausdorff(c, {{0.1, 0.2}}, {{0.1, 0.3}}) == doctest::Approx(0.1));
  CHECK(distance_to_set(c, 0.95, {{0.0, 0.1}}) == doctest::Approx(0.05));
  CHECK(distance_to_set(c, 0.05, {{0.0, 0.1}}) == 0.0);
  const PhaseSpace u = PhaseSpace::interval(0.0, 1.0);
  CHECK(distance_to_set(u, 0.95, {{0.0, 0.1}}) == doctest::Approx(0.85));
}

TEST_CASE("set-valued support examples") {
  SUBCASE("pure noise fills the circle") {
    const RandomMap1D map = make_map(PureNoise{0.1});
    const auto s = minimal_invariant_set(map, 0.3, Grid(map.space(), 256));
    REQUIRE(s.components.size() == 1);
    CHECK(s.components[0].hi - s.components[0].lo == doctest::Approx(1.0));
  }
  SUBCASE("affine contraction: closed-form fixed interval") {
    // [lo, hi] = [c - sigma, c + sigma] / (1 - lambda) for lambda in (0, 1)
    const double c = 0.3, lambda = 0.5, sigma = 0.1;
    const RandomMap1D map = make_map(AffineTest{c, lambda, sigma, 0.0, 1.0});
    const auto s = minimal_invariant_set(map, 0.5, Grid(map.space(), 1000));
    REQUIRE(s.exact.size() == 1);
    CHECK(s.exact[0].lo == doctest::Approx((c - sigma) / (1 - lambda)).epsilon(1e-9));
    CHECK(s.exact[0].hi == doctest::Approx((c + sigma) / (1 - lambda)).epsilon(1e-9));
    REQUIRE(s.components.size() == 1);
    CHECK(s.components[0].lo <= s.exact[0].lo);
    CHECK(s.components[0].hi >= s.exact[0].hi);
    CHECK(s.components[0].hi - s.components[0].lo <= s.exact[0].hi - s.exact[0].lo + 2e-3 + 1e-12);
  }
  SUBCASE("period-3 window has three bands") {
    const RandomMap1D map = make_map(Logistic{3.84, 0.005});
    const auto s = minimal_invariant_set(map, 0.5, Grid(map.space(), 4096));
    CHECK(s.exact.size() == 3);
    CHECK(s.components.size() == 3);
  }
  SUBCASE("circle map locked near a fixed point") {
    const double a = 0.05, eps = 0.9, sigma = 0.05;
    const RandomMap1D map = make_map(StandardCircle{a, eps, sigma});
    const auto s = minimal_invariant_set(map, 0.0, Grid(map.space(), 2048));
    REQUIRE(s.exact.size() == 1);
    // the stable deterministic fixed point lies inside the noisy support
    const auto fp = oracle::circle_fixed_points(a, eps);
    REQUIRE(fp.size() == 2);
    const double stable = std::abs(1.0 + eps * std::cos(2 * oracle::kPi * fp[0])) < 1.0 ? fp[0] : fp[1];
    CHECK(distance_to_set(map.space(), stable, s.exact) == 0.0);
  }
}

TEST_CASE("density and set-valued supports agree") {
  struct Case {
    RandomMap1D map;
    double seedpoint;
    double tol;
  };
  const Case cases[] = {{make_map(StandardCircle{0.05, 0.9, 0.05}), 0.0, 0.01},
                        {make_map(Logistic{3.84, 0.005}), 0.5, 0.01},
                        {make_map(AffineTest{0.3, 0.5, 0.1, 0.0, 1.0}), 0.5, 0.01}};
  for (const auto& c : cases) {
    INFO(c.map.describe());
    const Grid g(c.map.space(), 2048);
    const auto rho = stationary_densities(eigen(build_ulam(c.map, g)))[0];
    const auto dens = support_from_density(g, rho);
    const auto sv = minimal_invariant_set(c.map, c.seedpoint, g);
    const double h = hausdorff(c.map.space(), dens.components, sv.components);
    MESSAGE("hausdorff " << h);
    CHECK(dens.components.size() == sv.components.size());
    CHECK(h < c.tol);
  }
}

TEST_CASE("Birkhoff averages match the Ulam density") {
  const RandomMap1D map = make_map(StandardCircle{0.1, 0.5, 0.1});
  const Grid g(map.space(), 2048);
  const auto rho = stationary_densities(eigen(build_ulam(map, g)))[0];
  const Observable ind = Observable::indicator(0.0, 0.25);
  double expected = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) expected += ind(map.space(), g.mid(i)) * rho[i] * g.width();
  const auto est = birkhoff_average(map, 0.3, ind, 2000000, 1000, 17);
  MESSAGE("birkhoff " << est.value << " +- " << est.std_error << " ulam " << expected);
  CHECK(est.std_error > 0.0);
  CHECK(std::abs(est.value - expected) < 5.0 * est.std_error + 2e-3);
}

TEST_CASE("property: set-valued support is forward invariant") {
  for (const auto& c : gen::cases(15, 707, gen::any_map)) {
    INFO(c.label);
    const RandomMap1D map = c.make();
    const Grid g(map.space(), 512);
    const double seedpoint = map.space().lower() + 0.5 * map.space().length();
    const auto s = minimal_invariant_set(map, seedpoint, g);
    REQUIRE(!s.exact.empty());
    for (const auto& piece : s.exact) CHECK(covered(map.space(), interval_image(map, piece), s.exact, 1e-9));
    // snapped components contain the exact set
    for (const auto& piece : s.exact) CHECK(covered(map.space(), piece, s.components, 1e-12));
  }
}

TEST_CASE("property: stationary densities are probability densities") {
  for (const auto& c : gen::cases(15, 808, gen::any_map)) {
    INFO(c.label);
    const RandomMap1D map = c.make();
    const Grid g(map.space(), 512);
    for (const auto& rho : stationary_densities(eigen(build_ulam(map, g)))) {
      double mass = 0.0;
      for (double v : rho) {
        CHECK(v >= -1e-12);
        mass += v * g.width();
      }
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}
