#include "patchsmooth/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace patchsmooth {

void ExecutionStrategy::validate() const {
  if (patch_workers < 1 || block_workers < 1) {
    throw std::invalid_argument("worker counts must be positive");
  }
  if (kind == StrategyKind::Serial && (patch_workers != 1 || block_workers != 1)) {
    throw std::invalid_argument("serial strategy takes no workers");
  }
  if (kind == StrategyKind::PatchParallel && block_workers != 1) {
    throw std::invalid_argument("patch-parallel strategy has no block workers");
  }
  if (kind == StrategyKind::BlockParallel && patch_workers != 1) {
    throw std::invalid_argument("block-parallel strategy has no patch workers");
  }
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Serial: return "serial";
    case StrategyKind::PatchParallel: return "patch";
    case StrategyKind::BlockParallel: return "block";
    case StrategyKind::TwoLevel: return "two-level";
  }
  return "?";
}

std::string_view to_string(PartitionPolicy policy) {
  switch (policy) {
    case PartitionPolicy::Greedy: return "greedy";
    case PartitionPolicy::RoundRobin: return "round-robin";
    case PartitionPolicy::InOrder: return "in-order";
  }
  return "?";
}

std::vector<std::vector<std::size_t>> partition_patches(std::span<const std::int64_t> loads,
                                                        int workers, PartitionPolicy policy) {
  if (workers < 1) throw std::invalid_argument("partition_patches needs at least one worker");
  const auto w = static_cast<std::size_t>(workers);
  const std::size_t n = loads.size();
  std::vector<std::vector<std::size_t>> bins(w);
  switch (policy) {
    case PartitionPolicy::RoundRobin:
      for (std::size_t i = 0; i < n; ++i) bins[i % w].push_back(i);
      break;
    case PartitionPolicy::InOrder: {
      const std::size_t base = n / w;
      const std::size_t extra = n % w;
      std::size_t next = 0;
      for (std::size_t b = 0; b < w; ++b) {
        const std::size_t count = base + (b < extra ? 1 : 0);
        for (std::size_t c = 0; c < count; ++c) bins[b].push_back(next++);
      }
      break;
    }
    case PartitionPolicy::Greedy: {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return loads[a] > loads[b]; });
      std::vector<std::int64_t> bin_load(w, 0);
      for (std::size_t i : order) {
        const auto target = static_cast<std::size_t>(
            std::min_element(bin_load.begin(), bin_load.end()) - bin_load.begin());
        bins[target].push_back(i);
        bin_load[target] += loads[i];
      }
      for (auto& b : bins) std::sort(b.begin(), b.end());
      break;
    }
  }
  return bins;
}

std::int64_t makespan(std::span<const std::int64_t> loads,
                      const std::vector<std::vector<std::size_t>>& bins) {
  std::int64_t worst = 0;
  for (const auto& b : bins) {
    std::int64_t sum = 0;
    for (std::size_t i : b) sum += loads[i];
    worst = std::max(worst, sum);
  }
  return worst;
}

namespace {

/// Shared failure state for one dispatch.
class FailureSink {
 public:
  bool aborted() const { return aborted_.load(std::memory_order_relaxed); }

  void record(std::size_t patch, std::size_t block) {
    std::lock_guard lock(mutex_);
    if (!error_) {
      error_ = std::current_exception();
      patch_ = patch;
      block_ = block;
    }
    aborted_.store(true, std::memory_order_relaxed);
  }

  void rethrow_if_failed() const {
    if (!error_) return;
    std::string what = "unknown error";
    try {
      std::rethrow_exception(error_);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw WorkerFailure("smoothing task failed on patch " + std::to_string(patch_) + " block " +
                        std::to_string(block_) + ": " + what);
  }

 private:
  std::atomic<bool> aborted_{false};
  std::mutex mutex_;
  std::exception_ptr error_;
  std::size_t patch_ = 0;
  std::size_t block_ = 0;
};

void run_task(const BlockTask& task, FailureSink& sink, std::size_t patch, std::size_t block) {
  if (sink.aborted()) return;
  try {
    task(patch, block);
  } catch (...) {
    sink.record(patch, block);
  }
}

/// [begin, end) of chunk c when n items are cut into `chunks` near-equal runs.
std::pair<std::size_t, std::size_t> chunk_bounds(std::size_t n, std::size_t chunks, std::size_t c) {
  const std::size_t base = n / chunks;
  const std::size_t extra = n % chunks;
  const std::size_t begin = c * base + std::min(c, extra);
  return {begin, begin + base + (c < extra ? 1 : 0)};
}

template <typename Body>
void fork_join(std::size_t workers, Body body) {
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back([&body, w] { body(w); });
}

void run_patch_blocks(std::size_t patch, std::size_t nblocks, std::size_t q, const BlockTask& task,
                      FailureSink& sink) {
  if (q <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) run_task(task, sink, patch, b);
    return;
  }
  fork_join(q, [&](std::size_t w) {
    const auto [begin, end] = chunk_bounds(nblocks, q, w);
    for (std::size_t b = begin; b < end; ++b) run_task(task, sink, patch, b);
  });
}

}  // namespace

void for_each_patch_block(std::span<const std::size_t> blocks_per_patch,
                          const ExecutionStrategy& strategy, std::span<const std::int64_t> loads,
                          const BlockTask& task) {
  strategy.validate();
  if (loads.size() != blocks_per_patch.size()) {
    throw std::invalid_argument("one load per patch required");
  }
  const std::size_t npatch = blocks_per_patch.size();
  FailureSink sink;

  switch (strategy.kind) {
    case StrategyKind::Serial:
      for (std::size_t p = 0; p < npatch; ++p) {
        for (std::size_t b = 0; b < blocks_per_patch[p]; ++b) run_task(task, sink, p, b);
      }
      break;

    case StrategyKind::PatchParallel:
    case StrategyKind::TwoLevel: {
      const auto bins = partition_patches(loads, strategy.patch_workers, strategy.partition);
      const auto q = static_cast<std::size_t>(strategy.block_workers);
      auto body = [&](std::size_t w) {
        for (std::size_t p : bins[w]) run_patch_blocks(p, blocks_per_patch[p], q, task, sink);
      };
      if (bins.size() == 1) {
        body(0);
      } else {
        fork_join(bins.size(), body);
      }
      break;
    }

    case StrategyKind::BlockParallel: {
      std::vector<std::size_t> first(npatch + 1, 0);
      for (std::size_t p = 0; p < npatch; ++p) first[p + 1] = first[p] + blocks_per_patch[p];
      const std::size_t total = first.back();
      const auto q = static_cast<std::size_t>(strategy.block_workers);
      auto body = [&](std::size_t w) {
        const auto [begin, end] = chunk_bounds(total, q, w);
        if (begin == end) return;
        auto p = static_cast<std::size_t>(
            std::upper_bound(first.begin(), first.end(), begin) - first.begin() - 1);
        for (std::size_t t = begin; t < end; ++t) {
          while (t >= first[p + 1]) ++p;
          run_task(task, sink, p, t - first[p]);
        }
      };
      if (q == 1) {
        body(0);
      } else {
        fork_join(q, body);
      }
      break;
    }
  }
  sink.rethrow_if_failed();
}

}  // namespace patchsmooth
