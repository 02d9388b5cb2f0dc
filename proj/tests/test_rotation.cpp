#include <doctest.h>

#include <cmath>

#include "rds/error.hpp"
#include "rds/rotation.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace rds;

TEST_CASE("rigid rotation with noise") {
  for (double a : {0.0, 0.13, 0.37, -0.2}) {
    const RandomMap1D map = make_map(StandardCircle{a, 0.0, 0.05});
    const auto mc = rotation_mc(map, 0.3, 1000000, 5);
    CHECK(std::abs(mc.rho - a) < 1e-3);
    CHECK(rotation_spectral(map, Grid(map.space(), 512)).rho == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("locked circle map does not rotate") {
  const RandomMap1D map = make_map(StandardCircle{0.05, 0.9, 0.05});
  const auto mc = rotation_mc(map, 0.0, 1000000, 9);
  CHECK(std::abs(mc.rho) < 1e-3);
  const auto sp = rotation_spectral(map, Grid(map.space(), 2048));
  CHECK(sp.locked);
  CHECK(std::abs(sp.rho) < 1e-3);
  CHECK(std::abs(sp.rho_chain) < 1e-12);
  const auto est = rotation_estimate(map, Grid(map.space(), 2048), 0.0, 1000000, 9);
  CHECK(est.discrepancy == doctest::Approx(std::abs(est.rho_mc - est.rho_spectral)));
  CHECK(est.discrepancy <= std::max(1e-3, 2.0 / std::sqrt(1e6)));
}

TEST_CASE("mean displacement") {
  const double a = 0.1, eps = 0.7;
  for (NoiseKind k : {NoiseKind::Uniform, NoiseKind::SmoothBump}) {
    const RandomMap1D map = make_map(StandardCircle{a, eps, 0.08}, k);
    for (double x : {0.0, 0.2, 0.65}) {
      // E_w f(x; w) - x by direct quadrature over the noise law
      const double direct = oracle::simpson(
          [&](double w) { return map.noise().density(w) * (map.lift(x, w) - x); }, -1.0, 1.0, 1e-14);
      CHECK(mean_displacement(map, x) == doctest::Approx(direct).epsilon(1e-10));
      CHECK(mean_displacement(map, x) == doctest::Approx(a + eps / (2 * oracle::kPi) * std::sin(2 * oracle::kPi * x)));
    }
  }
}

TEST_CASE("rotation needs a circle map") {
  const RandomMap1D map = make_map(Logistic{3.8, 0.01});
  CHECK_THROWS_AS(rotation_mc(map, 0.3, 10000, 1), Error);
  CHECK_THROWS_AS(rotation_spectral(map, Grid(map.space(), 64)), Error);
}

TEST_CASE("plateau at zero matches the locking window") {
  // {rho = 0} = {|a| <= eps/2pi - sigma}
  const double eps = 0.9, sigma = 0.05, edge = eps / (2 * oracle::kPi) - sigma;
  for (double a : {edge - 0.004, -edge + 0.004}) {
    const RandomMap1D map = make_map(StandardCircle{a, eps, sigma});
    CHECK(rotation_spectral(map, Grid(map.space(), 2048)).locked);
  }
  for (double a : {edge + 0.004, -edge - 0.004}) {
    const RandomMap1D map = make_map(StandardCircle{a, eps, sigma});
    const auto sp = rotation_spectral(map, Grid(map.space(), 2048));
    CHECK_FALSE(sp.locked);
    CHECK(std::abs(sp.rho) > 0.0);
  }
}

TEST_CASE("property: independence of the starting point") {
  for (const auto& c : gen::cases(20, 1001, gen::circle)) {
    INFO(c.label);
    const RandomMap1D map = c.make();
    const std::size_t n = 10000;
    const auto p = rotation_mc(map, 0.1, n, 77);
    const auto q = rotation_mc(map, 0.6, n, 77);
    CHECK(std::abs(p.rho - q.rho) <= 2.0 / n);
  }
}

TEST_CASE("property: Monte Carlo and spectral rotation agree") {
  for (const auto& c : gen::cases(10, 1002, gen::circle)) {
    INFO(c.label);
    const RandomMap1D map = c.make();
    const auto est = rotation_estimate(map, Grid(map.space(), 2048), 0.2, 1000000, 3);
    CHECK(std::isfinite(est.rho_mc));
    CHECK(std::isfinite(est.rho_spectral));
    CHECK(est.discrepancy <= std::max(1e-3, 3.0 * est.mc_std_error));
  }
}

TEST_CASE("property: rotation is odd in a and nondecreasing") {
  for (const auto& c : gen::cases(6, 1003, gen::circle)) {
    INFO(c.label);
    const auto& f = std::get<StandardCircle>(c.family);
    double prev = -INFINITY;
    for (int i = 0; i <= 20; ++i) {
      const double a = -0.5 + i / 20.0;
      const RandomMap1D map = make_map(StandardCircle{a, f.eps, f.sigma}, c.noise);
      const RandomMap1D mirror = make_map(StandardCircle{-a, f.eps, f.sigma}, c.noise);
      const Grid g(map.space(), 512);
      const double rho = rotation_spectral(map, g).rho;
      CHECK(rho == doctest::Approx(-rotation_spectral(mirror, g).rho).epsilon(1e-9));
      CHECK(rho >= prev - 1e-3);
      prev = rho;
    }
  }
}
