#pragma once

#include <cstddef>
#include <functional>

namespace hjreach {

/// Worker count: HJREACH_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int thread_count();

/// Calls fn(i) for i in [begin, end). The range is split into contiguous
/// blocks, one per worker, so results never depend on scheduling as long as
/// fn writes only to index-owned storage.
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end, const std::function<void(std::ptrdiff_t)>& fn);

}  // namespace hjreach
