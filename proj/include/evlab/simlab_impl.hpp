#pragma once
// Template definitions for simlab.hpp.

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace evlab::simlab {

namespace detail {
/// Rethrows the exception as the same class with "replication i: " prepended.
[[noreturn]] void rethrow_indexed(std::exception_ptr error, std::size_t index);
}  // namespace detail

template <typename T>
std::vector<T> run_replications(const SimConfig& cfg,
                                const std::function<T(std::size_t, Rng&)>& body) {
  cfg.validate();
  std::vector<T> results(cfg.reps);
  std::vector<std::exception_ptr> errors(cfg.reps);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  // Workers claim small blocks of indices; where a result lands depends only
  // on its index.
  constexpr std::size_t kBlock = 64;
  auto worker = [&] {
    for (;;) {
      const std::size_t start = next.fetch_add(kBlock);
      if (start >= cfg.reps || failed.load()) return;
      const std::size_t stop = std::min(cfg.reps, start + kBlock);
      for (std::size_t i = start; i < stop; ++i) {
        try {
          Rng rng = Rng::for_stream(cfg.seed, i);
          results[i] = body(i, rng);
        } catch (...) {
          errors[i] = std::current_exception();
          failed.store(true);
        }
      }
    }
  };

  const std::size_t threads = std::min(cfg.threads, (cfg.reps + kBlock - 1) / kBlock);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < cfg.reps; ++i) {
    if (errors[i]) detail::rethrow_indexed(errors[i], i);
  }
  return results;
}

}  // namespace evlab::simlab
