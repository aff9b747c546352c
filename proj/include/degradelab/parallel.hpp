#pragma once

#include <cstddef>
#include <functional>

namespace degradelab {

/// Worker count: hardware concurrency, capped by DEGRADELAB_THREADS when set.
int worker_threads();

/// Runs fn(i) for i in [0, n). Iterations must write disjoint outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace degradelab
