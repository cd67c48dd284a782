#ifndef NTSDR_THREADING_HPP
#define NTSDR_THREADING_HPP

#include <cstddef>
#include <functional>

namespace ntsdr {

// Worker count: NTSDR_THREADS if set (clamped to [1, 256]), else the
// hardware concurrency. Re-read on every call so tests can flip the env var.
int thread_count();

// Runs fn(i) for i in [0, count). Work is split into contiguous chunks, one
// per worker. Results must be written to disjoint locations; there is no
// reduction step, so output bytes cannot depend on the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace ntsdr

#endif
