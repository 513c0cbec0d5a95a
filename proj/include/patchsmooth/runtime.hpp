#pragma once

// Execution strategies: serial, parallel over patches, parallel over blocks,
// and nested patch/block parallelism.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace patchsmooth {

enum class StrategyKind { Serial, PatchParallel, BlockParallel, TwoLevel };

/// How patches are distributed over patch workers.
enum class PartitionPolicy {
  Greedy,      // largest first onto the least loaded worker
  RoundRobin,  // patch i to worker i mod p
  InOrder,     // contiguous runs of the input order
};

struct ExecutionStrategy {
  StrategyKind kind = StrategyKind::Serial;
  int patch_workers = 1;
  int block_workers = 1;
  PartitionPolicy partition = PartitionPolicy::Greedy;

  static ExecutionStrategy serial() { return {}; }
  static ExecutionStrategy patch_parallel(int p) { return {StrategyKind::PatchParallel, p, 1}; }
  static ExecutionStrategy block_parallel(int q) { return {StrategyKind::BlockParallel, 1, q}; }
  static ExecutionStrategy two_level(int p, int q) { return {StrategyKind::TwoLevel, p, q}; }

  int total_workers() const { return patch_workers * block_workers; }
  void validate() const;
};

std::string_view to_string(StrategyKind kind);
std::string_view to_string(PartitionPolicy policy);

/// Assigns patch indices to `workers` bins given per-patch loads. Each bin
/// lists its patches in ascending index order; the result is deterministic.
std::vector<std::vector<std::size_t>> partition_patches(std::span<const std::int64_t> loads,
                                                        int workers,
                                                        PartitionPolicy policy = PartitionPolicy::Greedy);

/// Largest bin load of an assignment.
std::int64_t makespan(std::span<const std::int64_t> loads,
                      const std::vector<std::vector<std::size_t>>& bins);

class WorkerFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using BlockTask = std::function<void(std::size_t patch, std::size_t block)>;

/// Runs `task` exactly once for every (patch, block) pair, block b of patch p
/// existing for b < blocks_per_patch[p], and returns after all of them have
/// finished.
///
///  - serial: lexicographic (patch, block) order on the calling thread.
///  - patch parallel: patches partitioned over p workers, each running its
///    patches' blocks in order.
///  - block parallel: the flattened (patch, block) list is cut into q
///    contiguous chunks, one per worker.
///  - two level: patches partitioned over p workers; for each of its patches
///    a worker forks q threads over contiguous chunks of that patch's blocks
///    and joins them before moving on.
///
/// If a task throws, remaining unstarted tasks are skipped and WorkerFailure
/// is thrown after all threads joined; its message names the first failing
/// (patch, block).
void for_each_patch_block(std::span<const std::size_t> blocks_per_patch,
                          const ExecutionStrategy& strategy, std::span<const std::int64_t> loads,
                          const BlockTask& task);

}  // namespace patchsmooth
