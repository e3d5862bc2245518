#include "optdesign/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace optdesign {

namespace {

std::size_t env_threads() {
  if (const char* s = std::getenv("OPTDESIGN_THREADS")) {
    try {
      const long v = std::stol(s);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return 1;
}

std::atomic<std::size_t>& limit_ref() {
  static std::atomic<std::size_t> limit{env_threads()};
  return limit;
}

}  // namespace

std::size_t thread_limit() { return limit_ref().load(); }

void set_thread_limit(std::size_t n) { limit_ref().store(std::max<std::size_t>(1, n)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_parallel) {
  const std::size_t threads = std::min(thread_limit(), n / std::max<std::size_t>(1, min_parallel / 4));
  if (n < min_parallel || threads <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace optdesign
