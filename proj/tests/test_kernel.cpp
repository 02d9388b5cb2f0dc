#include <doctest.h>

#include <cmath>

#include "rds/error.hpp"
#include "rds/kernel.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace rds;

namespace {

double slice_mass(const KernelSlice& s) {
  double m = 0.0;
  for (const auto& iv : s.support) m += oracle::simpson([&](double y) { return s.density(y); }, iv.lo, iv.hi, 1e-13);
  return m;
}

}  // namespace

TEST_CASE("kernel examples") {
  SUBCASE("pure noise arc") {
    const auto s = kernel_at(make_map(PureNoise{0.1}), 0.5);
    REQUIRE(s.support.size() == 1);
    CHECK(s.support[0].lo == doctest::Approx(0.4));
    CHECK(s.support[0].hi == doctest::Approx(0.6));
    CHECK(s.density(0.45) == doctest::Approx(5.0));
    CHECK(s.density(0.7) == 0.0);
  }
  SUBCASE("logistic at the critical point") {
    const auto s = kernel_at(make_map(Logistic{3.85, 0.005}), 0.5);
    REQUIRE(s.support.size() == 1);
    CHECK(s.support[0].lo == doctest::Approx(0.96125).epsilon(1e-14));
    CHECK(s.support[0].hi == doctest::Approx(0.96375).epsilon(1e-14));
    CHECK(s.density(0.962) == doctest::Approx(400.0).epsilon(1e-12));
    CHECK(std::abs(slice_mass(s) - 1.0) < 1e-10);
  }
  SUBCASE("circle wraps around zero") {
    const auto s = kernel_at(make_map(StandardCircle{0.0, 0.9, 0.05}), 0.0);
    REQUIRE(s.support.size() == 2);
    CHECK(s.support[0].lo == 0.0);
    CHECK(s.support[0].hi == doctest::Approx(0.05));
    CHECK(s.support[1].lo == doctest::Approx(0.95));
    CHECK(s.support[1].hi == 1.0);
    CHECK(s.density(0.01) == doctest::Approx(10.0));
    CHECK(s.density(0.99) == doctest::Approx(10.0));
    CHECK(std::abs(slice_mass(s) - 1.0) < 1e-10);
  }
  SUBCASE("deterministic map has no kernel") {
    CHECK_THROWS_AS(kernel_at(make_map(StandardCircle{0.1, 0.5, 0.0}), 0.3), Error);
  }
}

TEST_CASE("preimage examples") {
  const auto p = preimage_set(make_map(PureNoise{0.1}), 0.5);
  REQUIRE(p.components.size() == 1);
  CHECK(p.components[0].lo == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(p.components[0].hi == doctest::Approx(0.6).epsilon(1e-10));

  const auto q = preimage_set(make_map(Logistic{3.85, 0.005}), 0.96);
  REQUIRE(q.components.size() == 2);
  // (a + sigma) x (1 - x) = 0.96 and (a - sigma) x (1 - x) = 0.96
  auto root = [](double a) { return 0.5 - std::sqrt(0.25 - 0.96 / a); };
  CHECK(q.components[0].lo == doctest::Approx(root(3.855)).epsilon(1e-10));
  CHECK(q.components[0].hi == doctest::Approx(root(3.845)).epsilon(1e-10));
  CHECK(q.components[1].lo == doctest::Approx(1.0 - root(3.845)).epsilon(1e-10));
  CHECK(q.components[1].hi == doctest::Approx(1.0 - root(3.855)).epsilon(1e-10));

  CHECK(preimage_set(make_map(Logistic{3.85, 0.005}), 0.9999).components.empty());
}

TEST_CASE("property: normalisation and change of variables") {
  for (const auto& c : gen::cases(30, 303, gen::any_map)) {
    INFO(c.label);
    const RandomMap1D map = c.make();
    rds::Rng r(9);
    for (int i = 0; i < 4; ++i) {
      const double x = map.space().lower() + (0.02 + 0.96 * r.uniform()) * map.space().length();
      const auto s = kernel_at(map, x);
      CHECK(s.support.size() <= 2);
      CHECK(std::abs(slice_mass(s) - 1.0) < 1e-10);
      // density = g(w) / |df/dw| at a random w
      const double w = gen::uniform(r, -0.99, 0.99);
      const double y = map(x, w);
      CHECK(s.density(y) == doctest::Approx(map.noise().density(w) / std::abs(map.dw(x, w))).epsilon(1e-8));
    }
  }
}

TEST_CASE("property: uniform additive kernels are flat at 1/(2 sigma)") {
  for (const auto& c : gen::cases(20, 304, gen::circle)) {
    const auto& f = std::get<StandardCircle>(c.family);
    const RandomMap1D map = make_map(f, NoiseKind::Uniform);
    INFO(c.label);
    const auto s = kernel_at(map, 0.3);
    const double y = map(0.3, 0.2);
    CHECK(s.density(y) == doctest::Approx(0.5 / f.sigma).epsilon(1e-12));
  }
}

TEST_CASE("property: duality between images and preimages") {
  for (const auto& c : gen::cases(10, 305, gen::any_map)) {
    INFO(c.label);
    const RandomMap1D map = c.make();
    rds::Rng r(13);
    for (int i = 0; i < 100; ++i) {
      const double x = map.space().lower() + r.uniform() * map.space().length();
      const double y = map.space().lower() + r.uniform() * map.space().length();
      const bool forward = in_image(map, x, y);
      const auto pre = preimage_set(map, y);
      bool backward = false;
      for (const auto& iv : pre.components) {
        const double xs = map.space().is_circle() && x < iv.lo ? x + 1.0 : x;
        backward = backward || (xs >= iv.lo && xs <= iv.hi);
      }
      // skip pairs within bisection tolerance of a boundary
      const auto [lo, hi] = image_bounds(map, x);
      const double edge = map.space().is_circle()
                              ? std::min(map.space().distance(y, lo), map.space().distance(y, hi))
                              : std::min(std::abs(y - lo), std::abs(y - hi));
      if (edge < 1e-9) continue;
      CHECK(forward == backward);
    }
  }
}

TEST_CASE("property: diffeomorphism fibres have one preimage component") {
  for (const auto& c : gen::cases(10, 306, gen::circle)) {
    INFO(c.label);
    const RandomMap1D map = c.make();
    for (double y : {0.1, 0.45, 0.8}) CHECK(preimage_set(map, y).components.size() == 1);
  }
}
