#pragma once

#include <cstddef>
#include <functional>

namespace rds {

/// Worker count: RDS_THREADS when set (>= 1), else the hardware count.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) split into contiguous chunks. Results must
/// not depend on the chunking; every caller writes disjoint outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rds
