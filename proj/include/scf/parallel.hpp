#pragma once

#include <cstddef>
#include <functional>

namespace scf {

/// Worker count: SCF_THREADS when set and positive, else hardware concurrency.
int thread_count();

/// Runs fn(i) for i in [0, n) across thread_count() workers. Indices are claimed
/// in order; callers write results to per-index slots so output is order independent.
/// The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace scf
