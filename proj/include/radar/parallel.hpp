#pragma once

#include <cstddef>
#include <functional>

namespace radar {

/// Worker count: RADAR_THREADS if set and positive, else the hardware count.
int worker_threads();

/// Runs fn(i) for i in [0, count) on up to `threads` threads. Exceptions are
/// rethrown on the caller (lowest index first).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace radar
