#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace catprobe {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Runs fn(block_index) for every block in [0, n_blocks) on up to n_threads
// workers. Blocks are claimed through an atomic counter; callers keep
// per-block results in index-addressed slots and merge them in block order
// afterwards, which makes the combined result independent of worker count
// and scheduling.
template <typename Fn>
void parallel_for_blocks(std::size_t n_blocks, unsigned n_threads, Fn&& fn) {
  if (n_blocks == 0) return;
  n_threads = std::max<unsigned>(1, std::min<std::size_t>(n_threads, n_blocks));
  if (n_threads == 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  for (unsigned w = 0; w < n_threads; ++w) {
    workers.emplace_back([&] {
      while (true) {
        const std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
        if (b >= n_blocks) break;
        try {
          fn(b);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& worker : workers) worker.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace catprobe
