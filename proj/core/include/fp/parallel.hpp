#pragma once

#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fp {

// Worker cap from FP_THREADS (0 or unset = hardware concurrency).
inline unsigned worker_count() {
  long v = 0;
  if (const char* env = std::getenv("FP_THREADS")) v = std::strtol(env, nullptr, 10);
  if (v <= 0) v = static_cast<long>(std::thread::hardware_concurrency());
  if (v <= 0) v = 1;
  return static_cast<unsigned>(v);
}

// Static partition over [0, n). `f(i)` must touch only state owned by index i;
// under that contract the result is bitwise independent of the worker count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fp
