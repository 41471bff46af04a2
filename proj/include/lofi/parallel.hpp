#pragma once
//
// Deterministic data-parallel loop.
//
// Work items write into disjoint, preallocated slots and draw from seeds
// derived per item, so the result is identical for any thread count. The
// cap is a process-wide setting (CLI --threads).
//
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace lofi {

inline std::atomic<int>& max_threads_setting() {
  static std::atomic<int> v{0};  // 0 = use hardware concurrency
  return v;
}

inline void set_max_threads(int n) { max_threads_setting().store(n); }

inline int effective_threads(std::size_t n_items) {
  int cap = max_threads_setting().load();
  if (cap <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    cap = hw == 0 ? 1 : static_cast<int>(hw);
  }
  if (static_cast<std::size_t>(cap) > n_items)
    cap = static_cast<int>(n_items);
  return cap < 1 ? 1 : cap;
}

/// Runs f(i) for i in [0, n). f must only touch state owned by item i.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  if (n == 0) return;
  const int threads = effective_threads(n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          f(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace lofi
