#pragma once

#include <cstddef>
#include <functional>

namespace clipflow {

// Number of worker threads for per-sample work inside one step.
// CLIPFLOW_THREADS caps it; results are bit-identical for any value
// because workers write disjoint slots and reductions stay sequential.
std::size_t intra_step_threads();

// Runs fn(i) for i in [begin, end) across intra_step_threads() workers.
// fn must only write state owned by index i.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace clipflow
