#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sconv/errors.hpp"
#include "sconv/metrics.hpp"

namespace sconv {

enum class Format { kEcr, kPecr };

/// Simulated device grid: one block per output row (or pooling-pack row),
/// one thread per result. shared_bytes_per_block models the block's format
/// payload: ECR rows hold two float arrays plus one int per thread; PECR
/// packs hold data + index + per-window counts at worst-case capacity.
struct Grid {
  int blocks = 0;
  int threads_per_block = 0;
  std::uint64_t shared_bytes_per_block = 0;

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct ExecConfig {
  int workers = 1;
  std::uint64_t shared_memory_budget = 49152;
};

Grid plan(const LayerDims& dims, Format format);

struct DispatchStats {
  OpCount ops;
  bool shared_budget_exceeded = false;
};

/// A work item threw; identifies the failing (block, thread) pair.
struct DispatchError : std::runtime_error {
  int block;
  int thread;
  DispatchError(int block, int thread, const std::string& what)
      : std::runtime_error("work item failed at block " + std::to_string(block) +
                           ", thread " + std::to_string(thread) + ": " + what),
        block(block),
        thread(thread) {}
};

/// Runs fn(block, thread, local_counters) for every pair in the grid.
/// Work items must be data-independent; outputs and merged counters are
/// identical for any worker count. Blocks are partitioned contiguously
/// across workers; exceeding the shared-memory budget is reported, not fatal.
template <typename Fn>
DispatchStats dispatch(const Grid& grid, Fn&& fn, const ExecConfig& cfg = {}) {
  if (grid.blocks < 1 || grid.threads_per_block < 1) {
    throw ConfigError("grid must have positive blocks and threads");
  }
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");

  DispatchStats stats;
  stats.shared_budget_exceeded =
      grid.shared_bytes_per_block > cfg.shared_memory_budget;

  const int workers = std::min(cfg.workers, grid.blocks);
  if (workers <= 1) {
    for (int b = 0; b < grid.blocks; ++b) {
      for (int t = 0; t < grid.threads_per_block; ++t) {
        try {
          fn(b, t, stats.ops);
        } catch (const std::exception& e) {
          throw DispatchError(b, t, e.what());
        }
      }
    }
    return stats;
  }

  struct Failure {
    int block;
    int thread;
    std::string what;
  };
  std::vector<OpCount> local(workers);
  std::vector<std::optional<Failure>> failures(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<std::int64_t>(grid.blocks) * w / workers);
    const int end = static_cast<int>(static_cast<std::int64_t>(grid.blocks) * (w + 1) / workers);
    pool.emplace_back([&, w, begin, end] {
      for (int b = begin; b < end; ++b) {
        for (int t = 0; t < grid.threads_per_block; ++t) {
          try {
            fn(b, t, local[w]);
          } catch (const std::exception& e) {
            failures[w] = Failure{b, t, e.what()};
            return;
          }
        }
      }
    });
  }
  for (auto& th : pool) th.join();

  const Failure* first = nullptr;
  for (const auto& f : failures) {
    if (f && (!first || f->block < first->block ||
              (f->block == first->block && f->thread < first->thread))) {
      first = &*f;
    }
  }
  if (first) throw DispatchError(first->block, first->thread, first->what);

  for (const OpCount& ops : local) stats.ops.merge(ops);
  return stats;
}

}  // namespace sconv
