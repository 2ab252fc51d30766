#pragma once

#include <cstddef>
#include <functional>

namespace modalflow {

// Worker count: min(hardware_concurrency, MODALFLOW_THREADS if set).
int worker_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks across
// workers; each index writes only to its own output slot, so results are
// identical for any worker count. The first exception thrown (if any) is
// rethrown on the calling thread after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace modalflow
