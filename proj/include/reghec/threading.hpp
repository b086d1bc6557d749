#pragma once

#include <cstddef>
#include <functional>

namespace reghec {

// REGHEC_THREADS when set (floored at 1), otherwise the hardware
// concurrency, otherwise 1.
int worker_count();

// Runs fn(0) .. fn(n-1), each exactly once, spread over at most
// worker_count() threads. Indices are claimed from a shared counter, so
// callers must not rely on any execution order. The first exception thrown
// by fn is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace reghec
