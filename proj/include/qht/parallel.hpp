#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace qht::parallel {

namespace detail {
inline std::atomic<std::size_t> thread_cap{0};
// set inside worker threads; nested loops then run serially
inline thread_local bool in_worker = false;
}

// 0 restores the automatic choice (QHT_THREADS, then hardware concurrency).
inline void set_thread_cap(std::size_t n) { detail::thread_cap.store(n); }

inline std::size_t thread_count() {
  if (const std::size_t cap = detail::thread_cap.load(); cap > 0)
    return cap;
  if (const char* env = std::getenv("QHT_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0)
        return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, n). Work is split into contiguous static
// blocks, so anything written to slot i is independent of the thread count.
// The exception from the lowest failing block is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t threads = 0) {
  if (n == 0)
    return;
  std::size_t workers = threads > 0 ? threads : thread_count();
  workers = std::min(workers, n);
  if (workers <= 1 || detail::in_worker) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      detail::in_worker = true;
      const std::size_t lo = w * block;
      const std::size_t hi = std::min(n, lo + block);
      try {
        for (std::size_t i = lo; i < hi; ++i)
          body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool)
    t.join();
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace qht::parallel
