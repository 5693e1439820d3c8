#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace brownscene {

/// Runs body(block) for block = 0..blocks-1 on `workers` threads. Blocks are
/// handed out dynamically, so callers must write results into slots indexed
/// by block; any reduction then runs in block order and the outcome does not
/// depend on the worker count. The first exception thrown by a body is
/// rethrown after all workers stop.
template <class Body>
void parallel_for_blocks(std::size_t blocks, unsigned workers, Body&& body) {
  workers = std::max(1u, workers);
  if (workers == 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) body(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= blocks) return;
      try {
        body(b);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(workers, blocks));
  pool.reserve(n);
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Maps replica index -> Result over `count` replicas, returned in index order.
template <class Result, class Fn>
std::vector<Result> map_replicas(std::size_t count, unsigned workers, Fn&& fn) {
  std::vector<std::optional<Result>> slots(count);
  parallel_for_blocks(count, workers, [&](std::size_t r) { slots[r].emplace(fn(r)); });
  std::vector<Result> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace brownscene
