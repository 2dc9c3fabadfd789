#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace gsf {

/// Static-chunked parallel loop over [0, n). Chunks are disjoint, so the result
/// is independent of thread count as long as the body only writes its own
/// indices. threads <= 1 runs inline.
inline void parallel_for(size_t n, int threads, const std::function<void(size_t, size_t)>& body) {
  if (n == 0) return;
  if (threads <= 1 || n == 1) {
    body(0, n);
    return;
  }
  const size_t workers = std::min<size_t>(static_cast<size_t>(threads), n);
  const size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (size_t w = 1; w < workers; ++w) {
    const size_t lo = w * chunk;
    const size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  body(0, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace gsf
