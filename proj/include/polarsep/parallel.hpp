#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace polarsep {

inline unsigned resolve_threads(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Runs fn(i) for i in [0, n). Work items must write to disjoint state;
// results are then identical to the sequential order.
template <typename Fn>
void parallel_for(std::size_t n, const Fn& fn, int threads_requested = 0) {
  const unsigned threads = std::min<std::size_t>(resolve_threads(threads_requested), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace polarsep
