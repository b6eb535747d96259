#pragma once

#include <cstddef>
#include <functional>

namespace concord {

// All batch kernels write per-item results into preallocated slots and are
// reduced serially in index order afterwards, so the parallel path is
// bit-identical to the serial reference regardless of thread count.
namespace parallel {

// Number of worker threads used by parallel_for. 0 means the OpenMP default.
void set_threads(int n);
int threads();

// True when the build has OpenMP and more than one thread is in play.
bool enabled();

// Runs fn(i) for i in [0, n). Parallel when enabled, otherwise plain loop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Serial reference driver, kept for tests and the benchmark.
void serial_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace parallel
}  // namespace concord
