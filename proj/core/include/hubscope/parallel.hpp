#pragma once

#include <cstddef>
#include <functional>

namespace hubscope {

// Process-wide worker count used by every row-parallel kernel. Results never
// depend on it: work is split into independent index ranges and each output
// element is produced by exactly one fixed-order computation.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Calls fn(begin, end) over contiguous, disjoint chunks covering [0, count).
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace hubscope
