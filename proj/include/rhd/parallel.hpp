#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rhd {

namespace detail {
inline std::atomic<int>& configured_threads() {
  static std::atomic<int> value{0};
  return value;
}
inline thread_local bool in_parallel_region = false;
}  // namespace detail

// Number of worker threads used by parallel sections. 0 means "hardware".
inline void set_thread_count(int threads) { detail::configured_threads() = std::max(0, threads); }

inline int thread_count() {
  int t = detail::configured_threads();
  if (t > 0) return t;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, count). Work is split into contiguous blocks, so any
// per-index output is independent of the thread count. Nested calls run
// serially on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t threads =
      detail::in_parallel_region ? 1 : std::min<std::size_t>(count, static_cast<std::size_t>(thread_count()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(threads);
  const std::size_t block = (count + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * block;
    const std::size_t end = std::min(count, begin + block);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      detail::in_parallel_region = true;
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace rhd
