#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "types.hpp"

namespace oedipus {

// Worker count: OEDIPUS_THREADS if set (>= 1), otherwise hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("OEDIPUS_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1)
        return static_cast<unsigned>(v);
    } catch (const std::exception &) {
    }
  }
  return hw;
}

// Runs body(i) for i in [0, n) split into contiguous chunks. Each index is
// visited exactly once; callers write results into per-index slots, so the
// outcome never depends on scheduling.
template <typename Body> void parallel_for(Index n, Body &&body) {
  const unsigned workers = static_cast<unsigned>(std::min<Index>(worker_count(), std::max<Index>(n, 1)));
  if (workers <= 1 || n < 2) {
    for (Index i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const Index chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const Index lo = w * chunk;
    const Index hi = std::min<Index>(n, lo + chunk);
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (Index i = lo; i < hi; ++i)
          body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool)
    t.join();
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace oedipus
