#include "rds/rotation.hpp"

#include <cmath>
#include <numbers>
#include <queue>

#include "rds/quadrature.hpp"
#include "rds/spectral.hpp"

namespace rds {

namespace {

void require_circle(const RandomMap1D& map) {
  if (!map.space().is_circle()) throw Error(ErrorKind::InvalidParameter, "rotation numbers need a circle map");
}

// Cell integral of E delta; closed form for the standard family.
double cell_mean_displacement(const RandomMap1D& map, double left, double h) {
  if (const auto* f = std::get_if<StandardCircle>(&map.family())) {
    constexpr double tau = 2.0 * std::numbers::pi;
    return f->a * h + f->eps / (tau * tau) * (std::cos(tau * left) - std::cos(tau * (left + h)));
  }
  if (std::holds_alternative<PureNoise>(map.family())) return 0.0;
  static const GaussRule rule = gauss_legendre(5);
  double s = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    s += 0.5 * h * rule.weights[k] * mean_displacement(map, left + 0.5 * h * (1.0 + rule.nodes[k]));
  }
  return s;
}

}  // namespace

double mean_displacement(const RandomMap1D& map, double x) {
  if (const auto* f = std::get_if<StandardCircle>(&map.family())) {
    return f->a + f->eps / (2.0 * std::numbers::pi) * std::sin(2.0 * std::numbers::pi * x);
  }
  static const GaussRule rule = gauss_legendre(33);
  double s = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double w = rule.nodes[k];
    s += rule.weights[k] * map.noise().density(w) * (map.lift(x, w) - x);
  }
  return s;
}

RotationMC rotation_mc(const RandomMap1D& map, double x0, std::size_t n, std::uint64_t seed) {
  require_circle(map);
  if (n < 10000) throw Error(ErrorKind::InvalidParameter, "n must be at least 1e4");
  constexpr std::size_t kBatches = 32;
  Rng rng = Rng::derive(seed, 0);
  double x = map.space().wrap(x0);
  // Kahan-compensated lift displacement, total and per batch.
  double total = 0.0, carry = 0.0;
  std::vector<double> batch(kBatches, 0.0);
  std::vector<std::size_t> count(kBatches, 0);
  const std::size_t per = n / kBatches;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = map.lift(x, map.noise().sample(rng));
    const double d = y - x;
    const double t = d - carry;
    const double next = total + t;
    carry = (next - total) - t;
    total = next;
    const std::size_t b = std::min(kBatches - 1, i / per);
    batch[b] += d;
    ++count[b];
    x = map.space().wrap(y);
  }
  RotationMC out;
  out.n = n;
  out.rho = total / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t b = 0; b < kBatches; ++b) {
    const double e = batch[b] / static_cast<double>(count[b]) - out.rho;
    ss += e * e;
  }
  out.std_error = std::sqrt(ss / static_cast<double>(kBatches - 1) / static_cast<double>(kBatches));
  return out;
}

RotationSpectral rotation_spectral(const RandomMap1D& map, const UlamMatrix& m, const std::vector<double>& density) {
  require_circle(map);
  const Grid& grid = m.grid();
  if (density.size() != m.size()) throw Error(ErrorKind::DimensionMismatch, "density length differs from matrix size");
  RotationSpectral out;
  const double h = grid.width();
  std::size_t top = 0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (density[i] > density[top]) top = i;
    if (density[i] == 0.0) continue;
    out.rho += density[i] * cell_mean_displacement(map, grid.edge(i), h);
    if (!m.row_drift().empty()) out.rho_chain += density[i] * h * m.row_drift()[i];
  }

  // The closed class reached from the densest cell.
  std::vector<char> seen(m.size(), 0);
  std::queue<std::size_t> q;
  q.push(top);
  seen[top] = 1;
  std::size_t reached = 1;
  while (!q.empty()) {
    const std::size_t i = q.front();
    q.pop();
    const auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] > 0.0 && !seen[j]) {
        seen[j] = 1;
        ++reached;
        q.push(j);
      }
    }
  }
  out.locked = reached < m.size();
  return out;
}

RotationSpectral rotation_spectral(const RandomMap1D& map, const Grid& grid) {
  require_circle(map);
  const UlamMatrix m = build_ulam(map, grid);
  const SpectralSet s = eigen(m, 4, 1e-10);
  const auto densities = stationary_densities(s);
  return rotation_spectral(map, m, densities.front());
}

RotationEstimate rotation_estimate(const RandomMap1D& map, const Grid& grid, double x0, std::size_t n,
                                   std::uint64_t seed) {
  const RotationSpectral sp = rotation_spectral(map, grid);
  const RotationMC mc = rotation_mc(map, x0, n, seed);
  RotationEstimate e;
  e.a = map.parameter();
  e.rho_mc = mc.rho;
  e.mc_std_error = mc.std_error;
  e.rho_spectral = sp.rho;
  e.rho_chain = sp.rho_chain;
  e.locked = sp.locked;
  e.n_iter = n;
  e.discrepancy = std::abs(e.rho_mc - e.rho_spectral);
  return e;
}

}  // namespace rds
