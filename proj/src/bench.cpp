#include "patchsmooth/bench.hpp"

#include "patchsmooth/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace patchsmooth {

PatchSetSpec PatchSetSpec::uniform(Index3 size, std::int64_t count) {
  return PatchSetSpec{{PatchGroup{size, count}}};
}

PatchSetSpec PatchSetSpec::mixed_table2() {
  PatchSetSpec s;
  for (std::int64_t n : {64, 72, 80, 88, 96}) s.groups.push_back({{n, n, n}, 16});
  return s;
}

std::int64_t PatchSetSpec::patch_count() const {
  std::int64_t n = 0;
  for (const auto& g : groups) n += g.count;
  return n;
}

std::int64_t PatchSetSpec::interior_cells() const {
  std::int64_t n = 0;
  for (const auto& g : groups) n += g.count * g.size.product();
  return n;
}

std::int64_t PatchSetSpec::allocated_cells() const {
  std::int64_t n = 0;
  for (const auto& g : groups) {
    const PatchDims d{g.size, 1};
    n += g.count * (2 * d.total_cells() + d.interior_cells());
  }
  return n;
}

std::string PatchSetSpec::label() const {
  if (*this == mixed_table2()) return "mixed";
  std::string out;
  for (const auto& g : groups) {
    if (!out.empty()) out += '+';
    out += to_string(g.size) + "*" + std::to_string(g.count);
  }
  return out;
}

std::int64_t cells_smoothed(const PatchSetSpec& spec, int steps) {
  return static_cast<std::int64_t>(steps) * spec.interior_cells();
}

std::int64_t max_cells_from_env() {
  const char* raw = std::getenv("PATCHSMOOTH_MAX_CELLS");
  if (raw == nullptr || *raw == '\0') return kDefaultMaxCells;
  char* end = nullptr;
  const double v = std::strtod(raw, &end);
  if (end == raw || *end != '\0' || !(v >= 1.0) || v > 9e18) {
    throw std::invalid_argument(std::string("PATCHSMOOTH_MAX_CELLS is not a positive count: ") +
                                raw);
  }
  return static_cast<std::int64_t>(v);
}

LevelXd build_patch_set(const PatchSetSpec& spec, std::int64_t max_cells,
                        DirichletClosure closure) {
  if (spec.groups.empty()) throw std::invalid_argument("empty patch set");
  for (const auto& g : spec.groups) {
    validate(PatchDims{g.size, 1});
    if (g.count < 1) throw std::invalid_argument("patch counts must be positive");
  }
  const auto need = spec.allocated_cells();
  if (need > max_cells) {
    throw std::length_error("patch set needs " + std::to_string(need) +
                            " cells, above the cap of " + std::to_string(max_cells) +
                            " (PATCHSMOOTH_MAX_CELLS)");
  }

  std::vector<PatchXd> patches;
  patches.reserve(static_cast<std::size_t>(spec.patch_count()));
  if (spec.groups.size() == 1) {
    const auto& g = spec.groups.front();
    const auto n = g.count;
    const auto gx = static_cast<std::int64_t>(std::ceil(std::cbrt(static_cast<double>(n)) - 1e-9));
    const auto gy = static_cast<std::int64_t>(
        std::ceil(std::sqrt(static_cast<double>(n) / static_cast<double>(gx)) - 1e-9));
    for (std::int64_t i = 0; i < n; ++i) {
      const Index3 slot{i % gx, (i / gx) % gy, i / (gx * gy)};
      patches.emplace_back(PatchDims{g.size, 1},
                           Index3{slot.x * g.size.x, slot.y * g.size.y, slot.z * g.size.z});
    }
  } else {
    std::int64_t x = 0;
    for (const auto& g : spec.groups) {
      for (std::int64_t c = 0; c < g.count; ++c) {
        patches.emplace_back(PatchDims{g.size, 1}, Index3{x, 0, 0});
        x += g.size.x;
      }
    }
  }
  return LevelXd(std::move(patches), closure);
}

std::vector<BenchRecord> run_bench(LevelXd& level, const std::string& label,
                                   std::span<const SmootherConfig> configs, int repeat) {
  if (repeat < 1) throw std::invalid_argument("repeat must be at least 1");
  InverseCache<double> cache;
  std::vector<BenchRecord> out;
  for (const auto& config : configs) {
    config.validate();
    make_sweep_plan(level, config.block_dims, cache);  // warm the cache

    BenchRecord rec;
    rec.patch_spec = label;
    rec.block_dims = config.block_dims;
    rec.scheme = config.scheme;
    rec.strategy = config.strategy.kind;
    rec.partition = config.strategy.partition;
    rec.patch_workers = config.strategy.patch_workers;
    rec.block_workers = config.strategy.block_workers;
    rec.steps = config.steps;
    rec.cells_smoothed = static_cast<std::int64_t>(config.steps) * level.interior_cells();
    rec.wall_seconds = std::numeric_limits<double>::infinity();

    for (int r = 0; r < repeat; ++r) {
      fill_random(level, config.seed);
      StepTimings timings;
      const auto before = cache.inversions();
      const auto t0 = std::chrono::steady_clock::now();
      run_steps(level, config, cache, &timings);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const auto inverted = cache.inversions() - before;
      if (inverted != 0) {
        throw std::logic_error("block inversion inside a timed region");
      }
      rec.timed_inversions += inverted;
      if (wall < rec.wall_seconds) {
        rec.wall_seconds = wall;
        rec.ghost_seconds = timings.ghost_seconds;
      }
    }
    rec.cells_per_second = static_cast<double>(rec.cells_smoothed) / rec.wall_seconds;
    out.push_back(std::move(rec));
  }
  annotate_speedup(out);
  return out;
}

std::vector<SpeedupRow> speedup_table(std::span<const TimingPoint> timings) {
  const auto base = std::find_if(timings.begin(), timings.end(),
                                 [](const TimingPoint& t) { return t.workers == 1; });
  if (base == timings.end()) throw std::invalid_argument("speedup table needs a p = 1 timing");
  std::vector<SpeedupRow> rows;
  for (const auto& t : timings) {
    if (t.workers < 1 || !(t.seconds > 0.0)) {
      throw std::invalid_argument("timings need positive worker counts and wall times");
    }
    const double s = base->seconds / t.seconds;
    rows.push_back({t.workers, s, s / t.workers});
  }
  return rows;
}

void annotate_speedup(std::vector<BenchRecord>& records) {
  for (auto& rec : records) {
    const auto base = std::find_if(records.begin(), records.end(), [&](const BenchRecord& b) {
      return b.patch_workers * b.block_workers == 1 && b.patch_spec == rec.patch_spec &&
             b.block_dims == rec.block_dims && b.scheme == rec.scheme && b.steps == rec.steps;
    });
    if (base == records.end()) continue;
    const TimingPoint pts[] = {{1, base->wall_seconds},
                               {rec.patch_workers * rec.block_workers, rec.wall_seconds}};
    const auto rows = speedup_table(pts);
    rec.speedup = rows[1].speedup;
    rec.efficiency = rows[1].efficiency;
  }
}

}  // namespace patchsmooth
