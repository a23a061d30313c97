#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace metaabd {

// Runs fn(worker, i) for i in [0, n) on up to `workers` threads. Items are
// handed out in index order; results must be written to per-index slots so
// the outcome does not depend on scheduling. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(std::size_t{0}, i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&](std::size_t w) {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(w, i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back([&body, w] { body(w); });
  body(0);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace metaabd
