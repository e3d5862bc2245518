#pragma once

#include <cstddef>
#include <functional>

namespace optdesign {

/// Upper bound on worker threads used by parallel loops.  Defaults to the
/// OPTDESIGN_THREADS environment variable, else 1.
std::size_t thread_limit();
void set_thread_limit(std::size_t n);

/// Runs body(begin, end) over [0, n) in contiguous chunks.  Chunks run
/// concurrently only when n >= min_parallel and more than one thread is
/// allowed; body must not touch shared mutable state.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_parallel = 4096);

}  // namespace optdesign
