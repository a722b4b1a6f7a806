#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace cltlab {

// Worker-pool capability handed down from the CLI dispatcher. workers == 0
// means "use the hardware count". Results must not depend on the worker
// count: work is split into batches, each batch accumulates independently,
// and batch results are combined in batch order by the caller.
struct ExecPolicy {
  unsigned workers = 0;

  unsigned effective_workers() const {
    if (workers != 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
  }
};

// Runs body(batch_index, first_item, last_item) for a contiguous split of
// [0, n_items) into n_batches pieces. Batches are scheduled round-robin over
// the workers; each batch writes only to its own slot.
template <class Body>
void run_batches(std::size_t n_items, std::size_t n_batches, const ExecPolicy& exec,
                 const Body& body) {
  if (n_batches == 0) return;
  auto bounds = [&](std::size_t b) {
    const std::size_t lo = n_items * b / n_batches;
    const std::size_t hi = n_items * (b + 1) / n_batches;
    return std::pair<std::size_t, std::size_t>{lo, hi};
  };
  const unsigned workers = exec.effective_workers();
  if (workers <= 1 || n_batches == 1) {
    for (std::size_t b = 0; b < n_batches; ++b) {
      auto [lo, hi] = bounds(b);
      body(b, lo, hi);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t b = w; b < n_batches; b += workers) {
        auto [lo, hi] = bounds(b);
        body(b, lo, hi);
      }
    });
  }
  for (auto& t : pool) t.join();
}

} // namespace cltlab
