#pragma once

#include <cstddef>
#include <functional>

namespace fstk {

// Process-wide cap on worker threads (0 or negative resets to the hardware
// count). Thread count must never change numeric results: parallel loops are
// only used for element-wise independent work writing disjoint outputs.
void set_max_threads(int n);
int max_threads();

// Invokes fn(begin, end) on disjoint chunks covering [0, n).
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace fstk
