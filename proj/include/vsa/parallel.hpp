#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace vsa {

// Runs fn(i) for i in [0, count) across up to `threads` workers (0 = hardware
// concurrency). Work items must be independent; the first exception thrown by
// any worker is rethrown on the calling thread after all workers join.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (count == 0) {
    return;
  }
  unsigned n_threads = threads > 0 ? static_cast<unsigned>(threads)
                                   : std::thread::hardware_concurrency();
  if (n_threads == 0) {
    n_threads = 1;
  }
  if (n_threads == 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) {
        return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) {
          first_error = std::current_exception();
        }
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned spawn = std::min<std::size_t>(n_threads, count);
  pool.reserve(spawn);
  for (unsigned t = 0; t < spawn; ++t) {
    pool.emplace_back(worker);
  }
  for (auto& th : pool) {
    th.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

}  // namespace vsa
