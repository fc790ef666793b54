#pragma once

#include <cstddef>
#include <functional>

namespace featurecuts {

/// Worker threads used by parallel_for. 0 means hardware concurrency.
void set_worker_threads(unsigned n);
unsigned worker_threads();

/// Runs fn(i) for i in [0, n). Results must be written to per-index slots;
/// nested calls from inside a worker run serially. The first exception
/// thrown (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace featurecuts
