#pragma once

#include <cstddef>
#include <functional>

namespace hintmvs {

// Global worker cap shared by every parallel loop. 0 = hardware concurrency.
// Reads the DT_THREADS environment variable once at startup as a fallback.
void set_thread_count(int n);
int thread_count();

// Statically partitioned loop over [0, n). Each worker owns a contiguous
// range, so disjoint per-index writes need no synchronization and results
// do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Range flavour for loops that want per-worker scratch state.
void parallel_ranges(std::size_t n,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace hintmvs
