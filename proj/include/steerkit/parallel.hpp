#pragma once

// Deterministic fork-join helper.  Worker count comes from STEERKIT_THREADS
// (unset, empty, invalid, or 0 → one worker per hardware thread).  Work is
// split into contiguous index ranges, so results written by index are
// identical for every worker count.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace steerkit {

inline int worker_count() {
  long v = -1;
  if (const char* env = std::getenv("STEERKIT_THREADS")) {
    char* end = nullptr;
    long parsed = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && parsed >= 0) v = parsed;
  }
  if (v > 0) return static_cast<int>(v);
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Calls body(lo, hi) over a partition of [0, count) into contiguous chunks,
// one per worker.  The first exception thrown by any worker is rethrown.
inline void parallel_for(std::int64_t count,
                         const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (count <= 0) return;
  std::int64_t workers = worker_count();
  if (workers > count) workers = count;
  if (workers <= 1) {
    body(0, count);
    return;
  }
  const std::int64_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::int64_t w = 0; w < workers; ++w) {
    std::int64_t lo = w * chunk;
    std::int64_t hi = lo + chunk < count ? lo + chunk : count;
    if (lo >= hi) break;
    threads.emplace_back([&, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace steerkit
