#ifndef POGRAD_PARALLEL_HPP
#define POGRAD_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace pograd {

// Worker count from POGRAD_THREADS (default 1). Invalid values fall back to 1.
inline int worker_threads() {
  const char* env = std::getenv("POGRAD_THREADS");
  if (!env) return 1;
  try {
    const int n = std::stoi(env);
    return n >= 1 ? n : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

// Runs fn(0..count-1). Tasks must write only to their own slot; results are
// therefore independent of scheduling. The exception of the lowest failing
// index is rethrown after all workers finish.
template <typename Fn>
void parallel_for(int count, Fn&& fn) {
  const int threads = std::min(worker_threads(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace pograd

#endif  // POGRAD_PARALLEL_HPP
