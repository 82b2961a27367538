// SPDX-License-Identifier: Apache-2.0
//
// Minimal static-partition parallel loop over an index range.

#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace cvqkd {

/// Calls fn(begin, end) on contiguous chunks of [0, count) using up to `jobs`
/// threads. Chunks are disjoint, so callers writing to pre-sized outputs need
/// no synchronisation. The first exception thrown by any chunk is rethrown.
template <typename Fn>
void parallel_chunks(std::int64_t count, int jobs, Fn&& fn) {
  if (count <= 0) return;
  const auto workers = static_cast<std::int64_t>(std::clamp<std::int64_t>(jobs, 1, count));
  if (workers == 1) {
    fn(std::int64_t{0}, count);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  const std::int64_t chunk = (count + workers - 1) / workers;
  for (std::int64_t t = 0; t < workers; ++t) {
    const std::int64_t begin = t * chunk;
    const std::int64_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cvqkd
