#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rds/error.hpp"
#include "rds/spectral.hpp"
#include "rds/transfer.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace rds;

TEST_CASE("full-circle pure noise on two cells") {
  const RandomMap1D map = make_map(PureNoise{0.5});
  const UlamMatrix m = build_ulam(map, Grid(map.space(), 2));
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) CHECK(m(r, c) == doctest::Approx(0.5).epsilon(1e-14));
  const std::vector<double> phi = {1.0, 1.0};
  const auto out = rds::apply(m, phi);
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == doctest::Approx(1.0));
}

TEST_CASE("pure noise band structure") {
  const RandomMap1D map = make_map(PureNoise{0.05});
  const Grid g(map.space(), 64);
  const UlamMatrix m = build_ulam(map, g);
  for (std::size_t r = 0; r < 64; ++r) {
    std::size_t nonzero = 0;
    for (std::size_t c = 0; c < 64; ++c) nonzero += m(r, c) > 0.0;
    // a cell spreads over 2 sigma n + 1 = 7.4 cell widths: cells i - 4 .. i + 4
    CHECK(nonzero == 9);
  }
  std::vector<double> e(64, 0.0);
  e[10] = 64.0;
  const auto out = rds::apply(m, e);
  for (std::size_t j = 0; j < 64; ++j) {
    const long d = std::labs(long(j) - 10);
    if (d > 4) CHECK(out[j] == 0.0);
  }
}

TEST_CASE("entries converge to an overlap oracle as the outer rule is refined") {
  // The outer integrand has kinks where image ends cross cell edges, so the
  // Gauss-Legendre error only falls algebraically in q.
  struct Case {
    RandomMap1D map;
    double bound_q32;
  };
  const Case cases[] = {{make_map(StandardCircle{0.2, 0.9, 0.05}), 1e-4},
                        {make_map(AffineTest{0.3, 0.5, 0.1, 0.0, 1.0}), 1e-5},
                        {make_map(PureNoise{0.05}), 1e-5},
                        {make_map(Logistic{3.84, 0.005}), 0.05}};
  for (const auto& c : cases) {
    INFO(c.map.describe());
    const Grid g(c.map.space(), 64);
    std::vector<double> ref(64 * 64);
    for (std::size_t i = 0; i < 64; ++i)
      for (std::size_t j = 0; j < 64; ++j) ref[i * 64 + j] = oracle::ulam_entry_uniform(c.map, g, i, j, 20000);
    std::vector<double> err;
    for (std::size_t q : {1, 5, 20, 32}) {
      const UlamMatrix m = build_ulam(c.map, g, q);
      double e = 0.0;
      for (std::size_t i = 0; i < 64; ++i)
        for (std::size_t j = 0; j < 64; ++j) e = std::max(e, std::abs(m(i, j) - ref[i * 64 + j]));
      err.push_back(e);
    }
    for (std::size_t k = 0; k + 1 < err.size(); ++k) CHECK(err[k + 1] < err[k]);
    CHECK(err.back() < c.bound_q32);
  }
}

TEST_CASE("windowed operator") {
  SUBCASE("whole space equals the plain matrix") {
    const RandomMap1D map = make_map(StandardCircle{0.1, 0.9, 0.1});
    const Grid g(map.space(), 128);
    const UlamMatrix a = build_ulam(map, g);
    const UlamMatrix b = build_windowed(map, g, {{0.0, 1.0}});
    REQUIRE(b.size() == a.size());
    for (std::size_t r = 0; r < a.size(); ++r)
      for (std::size_t c = 0; c < a.size(); ++c) CHECK(a(r, c) == b(r, c));
  }
  SUBCASE("toy leak map keeps half the mass") {
    const RandomMap1D map = make_map(AffineTest{0.0, 0.0, 2.0, -2.0, 2.0});
    const UlamMatrix w = build_windowed(map, Grid(map.space(), 64), {{-1.0, 1.0}});
    CHECK(w.size() == 32);
    for (std::size_t r = 0; r < w.size(); ++r) CHECK(w.row_sum(r) == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("logistic window leaks at the edges only") {
    const RandomMap1D map = make_map(Logistic{3.83, 0.005});
    const Grid g(map.space(), 1024);
    const UlamMatrix w = build_windowed(map, g, {{0.12, 0.97}});
    std::size_t leaking = 0;
    for (std::size_t r = 0; r < w.size(); ++r) {
      CHECK(w.row_sum(r) <= 1.0 + 1e-12);
      const double x = g.mid(w.cells()[r]);
      const double image_hi = (3.835) * x * (1 - x);
      const double image_lo = (3.825) * x * (1 - x);
      if (image_lo > 0.13 && image_hi < 0.96) CHECK(w.row_sum(r) > 0.99);
      leaking += w.row_sum(r) < 1.0 - 1e-12;
    }
    CHECK(leaking > 0);
  }
  SUBCASE("empty window") {
    const RandomMap1D map = make_map(Logistic{3.83, 0.005});
    CHECK_THROWS_AS(build_windowed(map, Grid(map.space(), 64), {}), Error);
  }
}

TEST_CASE("apply conventions") {
  const RandomMap1D map = make_map(StandardCircle{0.3, 0.7, 0.08});
  const Grid g(map.space(), 96);
  const UlamMatrix m = build_ulam(map, g);
  std::vector<double> phi(96);
  rds::Rng r(23);
  for (double& v : phi) v = r.uniform();
  const auto once = rds::apply(m, phi);
  const auto twice = rds::apply(m, once);
  // square of the matrix, pushed forward once
  const Eigen::MatrixXd d = oracle::dense(m);
  const Eigen::MatrixXd sq = d * d;
  for (std::size_t j = 0; j < 96; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 96; ++i) s += phi[i] * sq(i, j);
    CHECK(twice[j] == doctest::Approx(s).epsilon(1e-12));
  }
  CHECK_THROWS_AS(rds::apply(m, std::vector<double>(5, 1.0)), Error);
}

TEST_CASE("property: stochasticity, conservation and positivity") {
  for (const auto& c : gen::cases(20, 404, gen::any_map)) {
    INFO(c.label);
    const RandomMap1D map = c.make();
    const Grid g(map.space(), 256);
    const UlamMatrix m = build_ulam(map, g);
    for (std::size_t r = 0; r < m.size(); ++r) {
      CHECK(std::abs(m.row_sum(r) - 1.0) < 1e-12);
      for (double v : m.row(r)) CHECK(v >= 0.0);
    }
    std::vector<double> phi(g.size());
    rds::Rng r(31);
    for (double& v : phi) v = r.uniform() < 0.3 ? 0.0 : r.uniform();
    const auto out = rds::apply(m, phi);
    const double before = std::accumulate(phi.begin(), phi.end(), 0.0) * g.width();
    const double after = std::accumulate(out.begin(), out.end(), 0.0) * g.width();
    CHECK(std::abs(before - after) < 1e-10);
    for (double v : out) CHECK(v >= 0.0);
  }
}

TEST_CASE("grid refinement shrinks the density change") {
  const RandomMap1D map = make_map(StandardCircle{0.05, 0.9, 0.05});
  std::vector<std::vector<double>> phis;
  for (std::size_t n : {256, 512, 1024, 2048, 4096}) {
    const UlamMatrix m = build_ulam(map, Grid(map.space(), n));
    phis.push_back(stationary_densities(eigen(m))[0]);
  }
  // compare n against 2n on the coarse cells
  std::vector<double> gaps;
  for (std::size_t k = 0; k + 1 < phis.size(); ++k) {
    const auto& a = phis[k];
    const auto& b = phis[k + 1];
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - 0.5 * (b[2 * i] + b[2 * i + 1])));
    gaps.push_back(d);
    MESSAGE("n = " << a.size() << " sup gap " << d);
  }
  for (std::size_t k = 0; k + 1 < gaps.size(); ++k) CHECK(gaps[k + 1] < gaps[k]);
}
