#pragma once

#include <cstdint>
#include <functional>

namespace rsopt {

// Worker count for parallel_for; 1 disables threading, 0 resets to the
// hardware default. Results never depend on this value: work items only
// write their own slot and all reductions happen in the caller.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). fn must touch only per-i state.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace rsopt
