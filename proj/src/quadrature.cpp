#include "rds/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "rds/error.hpp"

namespace rds {

GaussRule gauss_legendre(std::size_t q) {
  if (q < 1) throw Error(ErrorKind::InvalidParameter, "quadrature order must be >= 1");
  GaussRule rule;
  rule.nodes.resize(q);
  rule.weights.resize(q);
  const std::size_t half = (q + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(q) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (std::size_t k = 2; k <= q; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      if (q == 1) { p1 = z; p0 = 1.0; }
      dp = static_cast<double>(q) * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    if (q == 1) {
      rule.nodes[0] = 0.0;
      rule.weights[0] = 2.0;
      return rule;
    }
    rule.nodes[i] = -z;
    rule.nodes[q - 1 - i] = z;
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.weights[i] = w;
    rule.weights[q - 1 - i] = w;
  }
  return rule;
}

}  // namespace rds
