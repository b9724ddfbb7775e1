#pragma once

#include <functional>

namespace ssdpt {

// Runs fn(i) for i in [0, n) on up to `threads` workers (strided split).
// Callers that need deterministic results should write into per-index slots
// and reduce in index order afterwards.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace ssdpt
