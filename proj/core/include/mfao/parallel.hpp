#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mfao {

/// Runs body(i) for i in [0, count) on `workers` threads using static contiguous chunks.
/// Each index is processed by exactly one thread, so results written per index do not
/// depend on the worker count. The first exception thrown is rethrown on the caller.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  if (count == 0) return;
  const std::size_t threads = std::min<std::size_t>(std::max(1u, workers), count);
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = count * t / threads;
    const std::size_t end = count * (t + 1) / threads;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mfao
