#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "optcomplete/types.hpp"

namespace optcomplete::parallel {

/// Process-wide worker count for row-parallel evaluation. Results are
/// bit-identical for every setting: work is split into fixed-size blocks,
/// each block is reduced sequentially, and block partials are always
/// combined in block order.
inline std::atomic<int>& worker_count_ref() {
  static std::atomic<int> count{1};
  return count;
}

inline int worker_count() { return worker_count_ref().load(); }
inline void set_worker_count(int workers) {
  worker_count_ref().store(workers < 1 ? 1 : workers);
}

inline constexpr Index kBlockSize = 256;

inline Index block_count(Index items) {
  return (items + kBlockSize - 1) / kBlockSize;
}

/// Runs `body(block, begin, end)` over [0, items) in blocks of kBlockSize.
/// `make_state()` builds one scratch state per worker and is passed to the
/// body by reference. Block-to-worker assignment is dynamic, so the body
/// must only write to per-block slots (plus its own state).
template <class MakeState, class Body>
void for_each_block(Index items, MakeState&& make_state, Body&& body) {
  const Index blocks = block_count(items);
  if (blocks == 0) return;
  const int workers =
      static_cast<int>(std::min<Index>(worker_count(), blocks));
  auto run_range = [&](auto& state, Index block) {
    const Index begin = block * kBlockSize;
    const Index end = std::min(items, begin + kBlockSize);
    body(state, block, begin, end);
  };
  if (workers <= 1) {
    auto state = make_state();
    for (Index b = 0; b < blocks; ++b) run_range(state, b);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    try {
      auto state = make_state();
      for (;;) {
        const Index b = next.fetch_add(1);
        if (b >= blocks) break;
        run_range(state, b);
      }
    } catch (...) {
      std::scoped_lock lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace optcomplete::parallel
