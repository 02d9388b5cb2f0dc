#pragma once

#include <cstddef>
#include <vector>

namespace rds {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

/// q-point Gauss-Legendre rule (Newton on the Legendre recurrence).
GaussRule gauss_legendre(std::size_t q);

}  // namespace rds
