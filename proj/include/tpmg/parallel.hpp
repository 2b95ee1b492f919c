#pragma once

#include <thread>
#include <vector>

#include "tpmg/types.hpp"

namespace tpmg {

// Static block partition over [0, n). With threads <= 1 this degenerates to a
// plain loop and is the bitwise-reproducible reference mode. Worker w owns a
// contiguous range, so disjoint-write kernels need no synchronisation.
template <typename Fn>
void parallel_for(Index n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  const Index nw = std::min<Index>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nw));
  for (Index w = 0; w < nw; ++w) {
    const Index lo = n * w / nw;
    const Index hi = n * (w + 1) / nw;
    pool.emplace_back([lo, hi, &fn] {
      for (Index i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace tpmg
