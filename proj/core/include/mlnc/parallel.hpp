#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mlnc {

// 0 means one worker per hardware thread; never more workers than jobs.
inline std::size_t resolve_workers(std::size_t requested, std::size_t jobs) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t w = requested == 0 ? hw : requested;
  return std::clamp<std::size_t>(w, 1, std::max<std::size_t>(jobs, 1));
}

// Runs fn(i) for i in [0, jobs) on up to `workers` threads. Every job runs
// even if another throws; afterwards the failure with the lowest index is
// rethrown.
template <typename Fn>
void parallel_for(std::size_t jobs, std::size_t workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace mlnc
