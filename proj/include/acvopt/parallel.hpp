#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace acvopt {

// Default worker count: ACVOPT_JOBS if set and positive, else 1.
inline int default_jobs() {
  const char* env = std::getenv("ACVOPT_JOBS");
  if (env == nullptr) return 1;
  const long parsed = std::strtol(env, nullptr, 10);
  return parsed > 0 ? static_cast<int>(parsed) : 1;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers write results
// into per-index slots they own, so reductions happen in canonical index
// order afterwards and the outcome is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  if (n == 0) return;
  const std::size_t workers =
      jobs <= 1 ? 1 : std::min(n, static_cast<std::size_t>(jobs));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
        next.store(n, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace acvopt
