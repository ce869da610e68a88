#pragma once

#include <functional>

#include "dssc/sparse.hpp"

namespace dssc {

/// Worker count: DSSC_THREADS if set (>= 1), else hardware concurrency.
int thread_count();

/// Runs fn(i) for i in [begin, end) across workers. Each index is handled by
/// exactly one worker, so writes to per-index slots need no synchronization
/// and results do not depend on the scheduling.
void parallel_for(Index begin, Index end, const std::function<void(Index)>& fn,
                  Index grain = 1);

}  // namespace dssc
