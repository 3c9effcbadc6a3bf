#pragma once

#include <cstdint>
#include <functional>

namespace romforge {

/// Caps the number of worker threads used by internally parallel routines.
/// n <= 0 resets to the hardware default.
void set_thread_count(int n);

int thread_count();

/// Runs fn(i) for i in [begin, end). Work is split into contiguous chunks,
/// one per worker; results written by fn must go to disjoint slots.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn);

} // namespace romforge
