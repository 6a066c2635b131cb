#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace emorl::detail {

// Runs fn(i) for i in [0, n). Each index is handled by exactly one worker,
// so results written to slot i are independent of scheduling. The exception
// from the lowest failing index is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first;
  std::size_t first_index = n;
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t k = 0; k < w; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (i < first_index) {
            first_index = i;
            first = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace emorl::detail
