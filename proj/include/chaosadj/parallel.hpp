#pragma once

#include <cstddef>
#include <functional>

namespace chaosadj {

// Global worker cap for parallel_for; 0 means hardware concurrency.
void set_max_threads(unsigned k);
unsigned max_threads();

// Runs body(i) for i in [0, n). Workers own disjoint index sets and the body
// must only write state belonging to its own index, so the result is
// identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace chaosadj
