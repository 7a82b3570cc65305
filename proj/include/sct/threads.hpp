// Copyright (c) 2026 SCT contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace sct {

/// Worker cap: SCT_THREADS if set (clamped to >= 1), else hardware concurrency.
inline int thread_cap() {
  static const int cap = [] {
    if (const char* env = std::getenv("SCT_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v >= 1) return static_cast<int>(std::min<long>(v, 256));
      return 1;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return cap;
}

/// Splits [0, n) into contiguous row ranges, one per worker. Each output row
/// is produced entirely inside one range, so results are identical for any
/// thread count. Runs inline when the total work is small.
template <typename Fn>
void parallel_for_rows(int n, std::int64_t work_per_row, Fn&& fn) {
  constexpr std::int64_t kSerialThreshold = 1 << 21;
  const int cap = thread_cap();
  if (n <= 1 || cap <= 1 || work_per_row * n < kSerialThreshold) {
    fn(0, n);
    return;
  }
  const int workers = std::min<int>(cap, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  const int chunk = (n + workers - 1) / workers;
  for (int w = 1; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  fn(0, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace sct
