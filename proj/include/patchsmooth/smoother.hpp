#pragma once

// Block Jacobi and chaotic block Gauss-Seidel sweeps over a level.

#include "patchsmooth/blocklinalg.hpp"
#include "patchsmooth/grid.hpp"
#include "patchsmooth/runtime.hpp"
#include "patchsmooth/stencil.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace patchsmooth {

enum class Scheme { BlockJacobi, ChaoticBlockGS };

std::string_view to_string(Scheme scheme);

constexpr double default_omega(Scheme scheme) {
  return scheme == Scheme::BlockJacobi ? 0.8 : 1.0;
}

struct SmootherConfig {
  Scheme scheme = Scheme::BlockJacobi;
  double omega = default_omega(Scheme::BlockJacobi);
  int steps = 3;
  Index3 block_dims{8, 8, 8};
  ExecutionStrategy strategy;
  std::uint64_t seed = 42;

  static SmootherConfig for_scheme(Scheme s) {
    SmootherConfig c;
    c.scheme = s;
    c.omega = default_omega(s);
    return c;
  }

  void validate() const;
};

/// Wall time spent refreshing ghost cells, accumulated over steps.
struct StepTimings {
  double ghost_seconds = 0.0;
};

/// u_b + omega * (inv * r_b).
template <typename Scalar>
DenseVector<Scalar> block_update(const DenseVector<Scalar>& u_b, const DenseVector<Scalar>& r_b,
                                 const DenseMatrix<Scalar>& inv, Scalar omega) {
  if (u_b.size() != r_b.size() || inv.rows() != u_b.size() || inv.cols() != u_b.size()) {
    throw std::invalid_argument("block_update: length mismatch");
  }
  DenseVector<Scalar> corr = matvec(inv, r_b);
  DenseVector<Scalar> out(u_b.size());
  for (Eigen::Index l = 0; l < u_b.size(); ++l) out[l] = u_b[l] + omega * corr[l];
  return out;
}

/// Block decompositions of every patch with their inverses resolved up front,
/// so sweeps never touch the cache lock.
template <typename Scalar>
struct SweepPlan {
  std::vector<BlockDecomposition> blocks;
  std::vector<std::vector<const DenseMatrix<Scalar>*>> inverses;
  std::vector<std::size_t> counts;
  std::vector<std::int64_t> loads;
};

template <typename Scalar>
SweepPlan<Scalar> make_sweep_plan(const Level<Scalar>& level, Index3 block_dims,
                                  InverseCache<Scalar>& cache) {
  SweepPlan<Scalar> plan;
  for (const auto& patch : level.patches()) {
    auto dec = decompose_blocks(patch.dims(), block_dims);
    std::map<Index3, const DenseMatrix<Scalar>*> by_shape;
    for (const auto& s : dec.shapes()) by_shape[s] = &cache.get(s);
    std::vector<const DenseMatrix<Scalar>*> inv;
    inv.reserve(dec.ranges.size());
    for (const auto& r : dec.ranges) inv.push_back(by_shape.at(r.extent));
    plan.counts.push_back(dec.ranges.size());
    plan.loads.push_back(patch.dims().interior_cells());
    plan.blocks.push_back(std::move(dec));
    plan.inverses.push_back(std::move(inv));
  }
  return plan;
}

namespace detail {

/// Chaotic sweeps read cells other workers may be writing; every access to u
/// goes through a relaxed atomic so each read returns a whole value.
struct RelaxedLoad {
  template <typename Scalar>
  Scalar operator()(const Scalar* u, std::int64_t i) const {
    static_assert(std::atomic_ref<Scalar>::is_always_lock_free);
    return std::atomic_ref<Scalar>(const_cast<Scalar&>(u[i])).load(std::memory_order_relaxed);
  }
};

template <typename Scalar>
struct Scratch {
  DenseVector<Scalar> residual;
  DenseVector<Scalar> correction;

  void resize(Eigen::Index n) {
    if (residual.size() != n) {
      residual.resize(n);
      correction.resize(n);
    }
  }
};

template <typename Scalar>
Scratch<Scalar>& thread_scratch() {
  thread_local Scratch<Scalar> s;
  return s;
}

template <typename Scalar, typename Fn>
void for_each_block_cell(const Patch<Scalar>& patch, const BlockRange& block, Fn fn) {
  Eigen::Index l = 0;
  for (std::int64_t k = block.lo.z; k < block.lo.z + block.extent.z; ++k) {
    for (std::int64_t j = block.lo.y; j < block.lo.y + block.extent.y; ++j) {
      std::int64_t o = patch.offset(block.lo.x, j, k);
      for (std::int64_t i = 0; i < block.extent.x; ++i, ++o, ++l) fn(l, o);
    }
  }
}

template <typename Scalar>
void jacobi_sweep(Level<Scalar>& level, const SmootherConfig& config,
                  const Stencil7<Scalar>& stencil, const SweepPlan<Scalar>& plan) {
  const Scalar omega = static_cast<Scalar>(config.omega);
  for_each_patch_block(plan.counts, config.strategy, plan.loads,
                       [&](std::size_t p, std::size_t b) {
                         auto& patch = level[p];
                         const auto& block = plan.blocks[p].ranges[b];
                         const auto& inv = *plan.inverses[p][b];
                         auto& s = thread_scratch<Scalar>();
                         s.resize(block.size());
                         block_residual_into(stencil, patch, block, s.residual, PlainLoad{});
                         matvec(inv, s.residual, s.correction);
                         const Scalar* u = patch.u().data();
                         Scalar* v = patch.v().data();
                         for_each_block_cell(patch, block, [&](Eigen::Index l, std::int64_t o) {
                           v[o] = u[o] + omega * s.correction[l];
                         });
                       });
}

template <typename Scalar>
void chaotic_gs_sweep(Level<Scalar>& level, const SmootherConfig& config,
                      const Stencil7<Scalar>& stencil, const SweepPlan<Scalar>& plan) {
  const Scalar omega = static_cast<Scalar>(config.omega);
  for_each_patch_block(plan.counts, config.strategy, plan.loads,
                       [&](std::size_t p, std::size_t b) {
                         auto& patch = level[p];
                         const auto& block = plan.blocks[p].ranges[b];
                         const auto& inv = *plan.inverses[p][b];
                         auto& s = thread_scratch<Scalar>();
                         s.resize(block.size());
                         block_residual_into(stencil, patch, block, s.residual, RelaxedLoad{});
                         matvec(inv, s.residual, s.correction);
                         Scalar* u = patch.u().data();
                         for_each_block_cell(patch, block, [&](Eigen::Index l, std::int64_t o) {
                           std::atomic_ref<Scalar> cell(u[o]);
                           cell.store(cell.load(std::memory_order_relaxed) + omega * s.correction[l],
                                      std::memory_order_relaxed);
                         });
                       });
}

template <typename Scalar>
void timed_refresh(Level<Scalar>& level, StepTimings* timings) {
  const auto t0 = std::chrono::steady_clock::now();
  refresh_ghosts(level);
  if (timings) {
    timings->ghost_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
}

template <typename Scalar>
void step_with_plan(Level<Scalar>& level, const SmootherConfig& config,
                    const Stencil7<Scalar>& stencil, const SweepPlan<Scalar>& plan,
                    StepTimings* timings) {
  if (config.scheme == Scheme::BlockJacobi) {
    jacobi_sweep(level, config, stencil, plan);
    for (auto& patch : level.patches()) patch.swap_solution_buffers();
  } else {
    chaotic_gs_sweep(level, config, stencil, plan);
  }
  timed_refresh(level, timings);
}

}  // namespace detail

/// One damped block Jacobi step: every block reads only the old iterate and
/// writes v; after all blocks finish u and v trade places, then the ghost
/// layers are refreshed.
template <typename Scalar>
void smooth_jacobi_step(Level<Scalar>& level, const SmootherConfig& config,
                        InverseCache<Scalar>& cache, StepTimings* timings = nullptr) {
  auto c = config;
  c.scheme = Scheme::BlockJacobi;
  c.validate();
  const auto plan = make_sweep_plan(level, c.block_dims, cache);
  detail::step_with_plan(level, c, cache.stencil(), plan, timings);
}

/// One chaotic block Gauss-Seidel step: blocks update u in place. Under the
/// serial strategy this is lexicographic block Gauss-Seidel; with several
/// workers, reads outside a block may see old or new neighbor values.
/// Ghost layers are refreshed once after all blocks finish.
template <typename Scalar>
void smooth_chaotic_gs_step(Level<Scalar>& level, const SmootherConfig& config,
                            InverseCache<Scalar>& cache, StepTimings* timings = nullptr) {
  auto c = config;
  c.scheme = Scheme::ChaoticBlockGS;
  c.validate();
  const auto plan = make_sweep_plan(level, c.block_dims, cache);
  detail::step_with_plan(level, c, cache.stencil(), plan, timings);
}

/// Global L2 norm of f - A u over all interior cells; ghosts must be current.
template <typename Scalar>
double residual_norm(const Level<Scalar>& level, const Stencil7<Scalar>& stencil) {
  double sum = 0.0;
  for (const auto& patch : level.patches()) {
    const BlockRange all{{0, 0, 0}, patch.dims().cells};
    DenseVector<Scalar> r(all.size());
    detail::block_residual_into(stencil, patch, all, r, detail::PlainLoad{});
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double x = static_cast<double>(r[i]);
      sum += x * x;
    }
  }
  return std::sqrt(sum);
}

/// Runs config.steps steps without residual bookkeeping.
template <typename Scalar>
void run_steps(Level<Scalar>& level, const SmootherConfig& config, InverseCache<Scalar>& cache,
               StepTimings* timings = nullptr) {
  config.validate();
  const auto plan = make_sweep_plan(level, config.block_dims, cache);
  detail::timed_refresh(level, timings);
  for (int k = 0; k < config.steps; ++k) {
    detail::step_with_plan(level, config, cache.stencil(), plan, timings);
  }
}

/// Runs config.steps steps and returns the residual norm before the first
/// step and after every step (length steps + 1).
template <typename Scalar>
std::vector<double> smooth(Level<Scalar>& level, const SmootherConfig& config,
                           InverseCache<Scalar>& cache, StepTimings* timings = nullptr) {
  config.validate();
  const auto plan = make_sweep_plan(level, config.block_dims, cache);
  detail::timed_refresh(level, timings);
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(config.steps) + 1);
  history.push_back(residual_norm(level, cache.stencil()));
  for (int k = 0; k < config.steps; ++k) {
    detail::step_with_plan(level, config, cache.stencil(), plan, timings);
    const double r = residual_norm(level, cache.stencil());
    if (!std::isfinite(r)) {
      throw std::runtime_error("residual became non-finite at step " + std::to_string(k + 1));
    }
    history.push_back(r);
  }
  return history;
}

}  // namespace patchsmooth
