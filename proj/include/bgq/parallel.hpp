#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace bgq {

// Explicit request, else BGQ_THREADS, else 1.
inline int resolve_threads(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BGQ_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
    }
  }
  return 1;
}

// Runs body(i) for i in [0, n) on `threads` workers with dynamic chunking.
// Bodies write to per-index slots; callers reduce in index order afterwards,
// so results never depend on the thread count.
template <class F>
void parallel_for(std::size_t n, int threads, F&& body, std::size_t chunk = 256) {
  threads = std::max(1, threads);
  if (threads == 1 || n <= chunk) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    try {
      for (;;) {
        const std::size_t b = next.fetch_add(chunk);
        if (b >= n) break;
        const std::size_t e = std::min(n, b + chunk);
        for (std::size_t i = b; i < e; ++i) body(i);
      }
    } catch (...) {
      std::lock_guard lk(err_mu);
      if (!err) err = std::current_exception();
      next.store(n);
    }
  };
  std::vector<std::thread> pool;
  const int extra = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), (n + chunk - 1) / chunk)) - 1;
  for (int t = 0; t < extra; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace bgq
