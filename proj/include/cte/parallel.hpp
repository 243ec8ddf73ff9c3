#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace cte {

// Pairwise (cascade) summation. The reduction tree depends only on the
// length of the input, so results do not depend on how the terms were made.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

// Calls f(i) for i in [0, n) on up to `workers` threads. Each index is
// written to its own slot, so output order is fixed.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) f(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

template <class T, class F>
std::vector<T> parallel_map(std::size_t n, unsigned workers, F&& f) {
  std::vector<T> out(n);
  parallel_for(n, workers, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

}  // namespace cte
