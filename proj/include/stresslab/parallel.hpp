#pragma once

#include <cstddef>
#include <functional>

namespace stresslab {

/// Worker count: STRESSLAB_WORKERS if set (>= 1), otherwise hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Callers write results
/// into pre-sized slots indexed by i so output order never depends on scheduling.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace stresslab
