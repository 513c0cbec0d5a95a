#pragma once

// Benchmark harness: patch sets, timed smoothing runs, strong-scaling tables.

#include "patchsmooth/grid.hpp"
#include "patchsmooth/runtime.hpp"
#include "patchsmooth/smoother.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace patchsmooth {

struct PatchGroup {
  Index3 size;
  std::int64_t count = 0;

  friend bool operator==(const PatchGroup&, const PatchGroup&) = default;
};

struct PatchSetSpec {
  std::vector<PatchGroup> groups;

  static PatchSetSpec uniform(Index3 size, std::int64_t count);
  /// 80 patches: 16 each of 64^3, 72^3, 80^3, 88^3 and 96^3.
  static PatchSetSpec mixed_table2();

  std::int64_t patch_count() const;
  std::int64_t interior_cells() const;
  /// u and v with ghosts plus f, summed over patches.
  std::int64_t allocated_cells() const;
  /// "mixed" for the mixed set, otherwise e.g. "64x64x64*80".
  std::string label() const;

  friend bool operator==(const PatchSetSpec&, const PatchSetSpec&) = default;
};

/// Interior cell updates performed by `steps` sweeps over the set.
std::int64_t cells_smoothed(const PatchSetSpec& spec, int steps);

inline constexpr std::int64_t kDefaultMaxCells = 300'000'000;

/// Allocation cap from PATCHSMOOTH_MAX_CELLS, kDefaultMaxCells when unset.
std::int64_t max_cells_from_env();

/// Allocates the set. A single group is laid out on a near-cubic lattice of
/// abutting patches; several groups are placed in a row along x with their
/// low corners aligned, so neighbors share partial faces. Throws
/// std::length_error when allocated_cells() exceeds `max_cells`.
LevelXd build_patch_set(const PatchSetSpec& spec, std::int64_t max_cells = max_cells_from_env(),
                        DirichletClosure closure = DirichletClosure::GhostCenter);

struct BenchRecord {
  std::string patch_spec;
  Index3 block_dims;
  Scheme scheme = Scheme::BlockJacobi;
  StrategyKind strategy = StrategyKind::Serial;
  PartitionPolicy partition = PartitionPolicy::Greedy;
  int patch_workers = 1;
  int block_workers = 1;
  int steps = 0;
  double wall_seconds = 0.0;
  std::int64_t cells_smoothed = 0;
  double cells_per_second = 0.0;
  double ghost_seconds = 0.0;
  std::uint64_t timed_inversions = 0;
  std::optional<double> speedup;
  std::optional<double> efficiency;
};

/// Times every configuration `repeat` times on `level` and keeps the fastest
/// run. Inverses are computed before the clock starts; each repetition
/// restarts from the seeded random initial guess.
std::vector<BenchRecord> run_bench(LevelXd& level, const std::string& label,
                                   std::span<const SmootherConfig> configs, int repeat = 3);

struct TimingPoint {
  int workers = 1;
  double seconds = 0.0;
};

struct SpeedupRow {
  int workers = 1;
  double speedup = 1.0;
  double efficiency = 1.0;
};

/// S(p) = T(1)/T(p), E(p) = S(p)/p. Requires a p = 1 entry.
std::vector<SpeedupRow> speedup_table(std::span<const TimingPoint> timings);

/// Fills speedup/efficiency of each record against the single-worker record
/// with the same patch set, block size, scheme and step count, if any.
void annotate_speedup(std::vector<BenchRecord>& records);

}  // namespace patchsmooth
