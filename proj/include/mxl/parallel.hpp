#pragma once

#include <cstddef>
#include <functional>

namespace mxl {

/// Runs fn(0..n-1) across worker threads (capped by MXL_THREADS, default
/// hardware concurrency). Callers must write to disjoint outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

std::size_t worker_count();

}  // namespace mxl
