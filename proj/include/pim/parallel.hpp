#pragma once

#include <cstddef>
#include <functional>

namespace pim {

// Worker count: hardware concurrency capped by the PIM_THREADS environment
// variable (and by set_max_threads, when nonzero).
std::size_t thread_count();
void set_max_threads(std::size_t n);

// Runs fn(i) for i in [0, n). Work items must only write to slots owned by
// their index; results are then independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pim
