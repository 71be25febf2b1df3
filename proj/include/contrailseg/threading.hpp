#pragma once

#include <functional>

namespace contrailseg {

// Workers for `jobs` independent tasks: min(jobs, hardware threads), further
// capped by CONTRAILSEG_THREADS when set.
int worker_count(int jobs);

// Runs fn(0..n-1) across worker threads; serial when one worker suffices.
// The first exception thrown by any task is rethrown after all tasks finish.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace contrailseg
