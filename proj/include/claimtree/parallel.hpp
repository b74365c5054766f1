#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace claimtree {

// Runs fn(0..n-1) on up to `jobs` threads. If any call throws, the exception
// of the lowest failing index is rethrown after all workers finish, so the
// reported failure does not depend on scheduling.
template <typename Fn>
void parallel_for(size_t n, int jobs, Fn&& fn) {
  if (n == 0) return;
  if (jobs <= 1 || n == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<size_t> next{0};
  {
    std::vector<std::jthread> workers;
    size_t count = std::min(n, static_cast<size_t>(jobs));
    workers.reserve(count);
    for (size_t w = 0; w < count; ++w) {
      workers.emplace_back([&] {
        for (size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace claimtree
