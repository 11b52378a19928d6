#pragma once
#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cpv {

/// Process-wide worker count; the CLI --threads flag writes here.
inline unsigned& worker_threads() {
  static unsigned n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Run fn(begin, end) over disjoint chunks of [0, n). The first exception
/// thrown by any worker is rethrown on the caller's thread.
template <class Fn>
void parallel_chunks(std::size_t n, Fn&& fn, unsigned threads = 0) {
  if (threads == 0) threads = worker_threads();
  if (n == 0) return;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::exception_ptr first_error;
  std::mutex err_mutex;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = static_cast<std::size_t>(t) * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Per-index parallel map over [0, n).
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = 0) {
  parallel_chunks(
      n,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      },
      threads);
}

}  // namespace cpv
