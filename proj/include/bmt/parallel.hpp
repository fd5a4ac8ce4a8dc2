#pragma once

#include <cstddef>
#include <functional>

namespace bmt {

// Worker count used by the internally parallel loops. 0 means
// std::thread::hardware_concurrency(). Results never depend on it.
void set_thread_count(unsigned n);
unsigned thread_count();

// Calls body(i) for i in [0, n), split into contiguous blocks across
// threads. Each index is visited exactly once; body must only write state
// owned by index i. Exceptions from any worker are rethrown (first by index).
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body);

} // namespace bmt
