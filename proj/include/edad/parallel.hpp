#pragma once

#include <cstddef>
#include <functional>

namespace edad {

/// Worker cap: EDAD_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(0..n-1) on up to `workers` threads. Iterations must write to
/// disjoint state. The first exception thrown is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace edad
