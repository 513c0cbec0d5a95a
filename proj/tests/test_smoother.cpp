#include "support.hpp"

#include "patchsmooth/analysis.hpp"
#include "patchsmooth/smoother.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

using namespace patchsmooth;
using namespace testsupport;

namespace {

std::vector<ExecutionStrategy> parallel_strategies() {
  return {ExecutionStrategy::patch_parallel(4), ExecutionStrategy::block_parallel(8),
          ExecutionStrategy::block_parallel(3), ExecutionStrategy::two_level(2, 4)};
}

SmootherConfig config(Scheme scheme, Index3 block, int steps = 1,
                      ExecutionStrategy strategy = ExecutionStrategy::serial()) {
  auto c = SmootherConfig::for_scheme(scheme);
  c.block_dims = block;
  c.steps = steps;
  c.strategy = strategy;
  return c;
}

/// One step of the dense stationary iteration u + omega M^{-1} (f - A u),
/// solved with Eigen's LU.
Vec dense_step(const Mat& a, const Mat& m, const Vec& u, const Vec& f, double omega) {
  return u + omega * Eigen::PartialPivLU<Mat>(m).solve(f - a * u);
}

}  // namespace

TEST_CASE("block_update examples") {
  const Vec u = random_vector(8, 1);
  const Mat inv = invert_dense(assemble_block_matrix(Stencil7d{}, {2, 2, 2}));
  CHECK(block_update(u, Vec::Zero(8).eval(), inv, 0.8) == u);

  // isolated single cell, u = 1, f = 0: r = -6
  Vec u1(1), r1(1);
  u1 << 1.0;
  r1 << -6.0;
  Mat inv1(1, 1);
  inv1 << 1.0 / 6.0;
  CHECK(block_update(u1, r1, inv1, 0.8)[0] == doctest::Approx(0.2).epsilon(1e-15));

  CHECK_THROWS_AS(block_update(u, Vec::Zero(7).eval(), inv, 1.0), std::invalid_argument);
}

TEST_CASE("single isolated cell relaxes to 0.2 in one Jacobi step") {
  auto level = single_patch_level({1, 1, 1});
  level[0].at(0, 0, 0) = 1.0;
  InverseCache<double> cache;
  auto c = config(Scheme::BlockJacobi, {1, 1, 1});
  refresh_ghosts(level);
  smooth_jacobi_step(level, c, cache);
  CHECK(level[0].at(0, 0, 0) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("an omega = 1 block update solves the block exactly") {
  const Stencil7d s;
  PatchXd p(PatchDims{{4, 4, 4}, 1});
  set_interior(p, random_vector(64, 5));
  set_rhs(p, random_vector(64, 6));
  fill_physical_ghosts(p);
  const BlockRange b{{2, 0, 2}, {2, 2, 2}};
  const Mat inv = invert_dense(assemble_block_matrix(s, b.extent));
  Vec ub(8);
  Eigen::Index l = 0;
  for (auto k = b.lo.z; k < b.lo.z + 2; ++k)
    for (auto j = b.lo.y; j < b.lo.y + 2; ++j)
      for (auto i = b.lo.x; i < b.lo.x + 2; ++i) ub[l++] = p.at(i, j, k);
  const Vec unew = block_update(ub, block_residual(s, p, b), inv, 1.0);
  l = 0;
  for (auto k = b.lo.z; k < b.lo.z + 2; ++k)
    for (auto j = b.lo.y; j < b.lo.y + 2; ++j)
      for (auto i = b.lo.x; i < b.lo.x + 2; ++i) p.at(i, j, k) = unew[l++];
  CHECK(block_residual(s, p, b).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("zero stays zero under every scheme and strategy") {
  for (auto scheme : {Scheme::BlockJacobi, Scheme::ChaoticBlockGS}) {
    for (auto strategy : parallel_strategies()) {
      auto level = single_patch_level({8, 8, 8});
      InverseCache<double> cache;
      const auto hist = smooth(level, config(scheme, {4, 4, 4}, 3, strategy), cache);
      CHECK(level[0].u().isZero(0.0));
      CHECK(hist.size() == 4);
      CHECK(std::all_of(hist.begin(), hist.end(), [](double r) { return r == 0.0; }));
    }
  }
}

TEST_CASE("exact solutions are fixed points") {
  // f = A u makes the residual vanish; both schemes must leave u alone up to
  // the rounding left in the residual.
  for (auto closure : {DirichletClosure::GhostCenter, DirichletClosure::CellFace}) {
    const PatchDims d{{6, 5, 4}, 1};
    const Vec x = random_vector(d.interior_cells(), 8);
    const Vec f = assemble_patch_matrix(Stencil7d{}, d, closure) * x;
    for (auto scheme : {Scheme::BlockJacobi, Scheme::ChaoticBlockGS}) {
      for (auto strategy : parallel_strategies()) {
        auto level = single_patch_level(d.cells, closure);
        set_interior(level[0], x);
        set_rhs(level[0], f);
        InverseCache<double> cache;
        smooth(level, config(scheme, {2, 3, 2}, 2, strategy), cache);
        CHECK(max_abs_diff(interior(level[0]), x) < 1e-13);
      }
    }
  }
}

TEST_CASE("one Jacobi step equals the dense block-diagonal iteration") {
  const Stencil7d s;
  for (auto closure : {DirichletClosure::GhostCenter, DirichletClosure::CellFace}) {
    for (const Index3 b : {Index3{2, 2, 2}, Index3{3, 2, 4}}) {
      const PatchDims d{{8, 8, 8}, 1};
      const Vec u0 = random_vector(d.interior_cells(), 31);
      const Vec f = random_vector(d.interior_cells(), 32);
      auto level = single_patch_level(d.cells, closure);
      set_interior(level[0], u0);
      set_rhs(level[0], f);
      refresh_ghosts(level);
      InverseCache<double> cache;
      smooth_jacobi_step(level, config(Scheme::BlockJacobi, b), cache);

      const Mat a = assemble_patch_matrix(s, d, closure);
      // the smoother inverts stencil blocks, so the closure term is lagged
      const Mat m = splitting_from(a, d.cells, b, false, s.center);
      const Vec expect = dense_step(a, m, u0, f, 0.8);
      CHECK(max_abs_diff(interior(level[0]), expect) < 1e-12);
    }
  }
}

TEST_CASE("one serial Gauss-Seidel step equals the dense block lower-triangular iteration") {
  const Stencil7d s;
  for (auto closure : {DirichletClosure::GhostCenter, DirichletClosure::CellFace}) {
    for (const Index3 b : {Index3{2, 2, 2}, Index3{4, 3, 3}}) {
      const PatchDims d{{8, 8, 8}, 1};
      const Vec u0 = random_vector(d.interior_cells(), 41);
      const Vec f = random_vector(d.interior_cells(), 42);
      auto level = single_patch_level(d.cells, closure);
      set_interior(level[0], u0);
      set_rhs(level[0], f);
      refresh_ghosts(level);
      InverseCache<double> cache;
      smooth_chaotic_gs_step(level, config(Scheme::ChaoticBlockGS, b), cache);

      const Mat a = assemble_patch_matrix(s, d, closure);
      const Mat m = splitting_from(a, d.cells, b, true, s.center);
      CHECK(max_abs_diff(interior(level[0]), dense_step(a, m, u0, f, 1.0)) < 1e-12);
    }
  }
}

TEST_CASE("serial Gauss-Seidel is reproducible bit for bit") {
  auto run = [] {
    auto level = single_patch_level({12, 10, 8});
    fill_random(level, 3);
    InverseCache<double> cache;
    const auto h = smooth(level, config(Scheme::ChaoticBlockGS, {4, 4, 4}, 4), cache);
    return std::pair{h, level[0].u()};
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("Jacobi is bit-identical across strategies on a multi-patch level") {
  auto build = [] {
    std::vector<PatchXd> ps;
    ps.emplace_back(PatchDims{{8, 8, 8}, 1}, Index3{0, 0, 0});
    ps.emplace_back(PatchDims{{6, 8, 8}, 1}, Index3{8, 0, 0});
    ps.emplace_back(PatchDims{{8, 5, 8}, 1}, Index3{0, 8, 0});
    ps.emplace_back(PatchDims{{7, 7, 3}, 1}, Index3{3, 2, 8});
    LevelXd level(std::move(ps));
    fill_random(level, 17);
    for (auto& p : level.patches()) p.f() = random_vector(p.f().size(), 18);
    return level;
  };
  auto ref = build();
  InverseCache<double> cache;
  const auto ref_hist = smooth(ref, config(Scheme::BlockJacobi, {3, 4, 2}, 3), cache);
  for (auto strategy : parallel_strategies()) {
    auto level = build();
    const auto hist = smooth(level, config(Scheme::BlockJacobi, {3, 4, 2}, 3, strategy), cache);
    CHECK(hist == ref_hist);
    for (std::size_t i = 0; i < level.size(); ++i) CHECK(level[i].u() == ref[i].u());
  }
}

TEST_CASE("Jacobi on a split patch reproduces the unsplit patch") {
  for (auto closure : {DirichletClosure::GhostCenter, DirichletClosure::CellFace}) {
    auto whole = single_patch_level({12, 8, 8}, closure);
    std::vector<PatchXd> ps;
    ps.emplace_back(PatchDims{{4, 8, 8}, 1}, Index3{0, 0, 0});
    ps.emplace_back(PatchDims{{8, 8, 8}, 1}, Index3{4, 0, 0});
    LevelXd split(std::move(ps), closure);
    const Vec u0 = random_vector(12 * 8 * 8, 51);
    set_interior(whole[0], u0);
    for (std::int64_t k = 0; k < 8; ++k)
      for (std::int64_t j = 0; j < 8; ++j)
        for (std::int64_t i = 0; i < 12; ++i) {
          auto& p = split[i < 4 ? 0 : 1];
          p.at(i < 4 ? i : i - 4, j, k) = whole[0].at(i, j, k);
        }
    InverseCache<double> cache;
    const auto c = config(Scheme::BlockJacobi, {4, 4, 2}, 5);
    const auto h_whole = smooth(whole, c, cache);
    const auto h_split = smooth(split, c, cache);
    for (std::int64_t k = 0; k < 8; ++k)
      for (std::int64_t j = 0; j < 8; ++j)
        for (std::int64_t i = 0; i < 12; ++i) {
          const auto& p = split[i < 4 ? 0 : 1];
          CHECK(p.at(i < 4 ? i : i - 4, j, k) == whole[0].at(i, j, k));
        }
    // the norm sums cells in a different order, so compare to rounding
    for (std::size_t k = 0; k < h_whole.size(); ++k)
      CHECK(h_split[k] == doctest::Approx(h_whole[k]).epsilon(1e-13));
  }
}

TEST_CASE("parallel chaotic Gauss-Seidel reduces the residual") {
  for (auto strategy : parallel_strategies()) {
    auto level = single_patch_level({16, 16, 16});
    fill_random(level, 42);
    InverseCache<double> cache;
    const auto h = smooth(level, config(Scheme::ChaoticBlockGS, {4, 4, 4}, 3, strategy), cache);
    CHECK(std::isfinite(h.back()));
    CHECK(h.back() < h.front());
    CHECK(std::all_of(h.begin(), h.end(), [](double r) { return r > 0.0; }));
  }
}

TEST_CASE("chaotic Gauss-Seidel on one-cell blocks never exposes a torn value") {
  // Detached one-cell patches have no neighbours, so each cell follows a
  // fixed trajectory whatever the interleaving. A sampler thread reads all
  // cells while the workers write; every value it sees must be one of the
  // trajectory values of that cell.
  constexpr int kCells = 64;
  constexpr int kSteps = 60;
  const double omega = 0.5;
  std::vector<PatchXd> ps;
  for (int c = 0; c < kCells; ++c) ps.emplace_back(PatchDims{{1, 1, 1}, 1}, Index3{3 * c, 0, 0});
  LevelXd level(std::move(ps));
  const Vec u0 = random_vector(kCells, 61, -10.0, 10.0);
  const Vec f = random_vector(kCells, 62, -10.0, 10.0);
  for (int c = 0; c < kCells; ++c) {
    level[c].at(0, 0, 0) = u0[c];
    level[c].f()[0] = f[c];
  }
  InverseCache<double> cache;
  const double inv = cache.get({1, 1, 1})(0, 0);
  std::vector<std::set<double>> allowed(kCells);
  for (int c = 0; c < kCells; ++c) {
    double u = u0[c];
    allowed[c].insert(u);
    for (int k = 0; k < kSteps; ++k) {
      double acc = 6.0 * u;
      for (int face = 0; face < 6; ++face) acc += -1.0 * 0.0;
      const double r = f[c] - acc;
      double corr = 0.0;
      corr += inv * r;
      u = u + omega * corr;
      allowed[c].insert(u);
    }
  }

  std::atomic<bool> done{false};
  std::vector<std::pair<int, double>> observed;
  observed.reserve(1 << 20);
  std::jthread sampler([&] {
    while (!done.load() && observed.size() + kCells < observed.capacity()) {
      for (int c = 0; c < kCells; ++c) {
        double& cell = level[c].u()[level[c].offset(0, 0, 0)];
        observed.emplace_back(c, std::atomic_ref<double>(cell).load(std::memory_order_relaxed));
      }
    }
  });
  auto cfg = config(Scheme::ChaoticBlockGS, {1, 1, 1}, kSteps, ExecutionStrategy::block_parallel(4));
  cfg.omega = omega;
  smooth(level, cfg, cache);
  done = true;
  sampler.join();
  CHECK(!observed.empty());
  std::size_t bad = 0;
  for (const auto& [c, x] : observed) bad += allowed[c].count(x) == 0;
  CHECK(bad == 0);
  for (int c = 0; c < kCells; ++c) CHECK(allowed[c].count(level[c].at(0, 0, 0)) == 1);
}

TEST_CASE("smooth contract") {
  auto level = single_patch_level({4, 4, 4});
  fill_random(level, 1);
  InverseCache<double> cache;
  auto c = config(Scheme::BlockJacobi, {2, 2, 2}, 1);
  CHECK(smooth(level, c, cache).size() == 2);
  c.steps = 0;
  CHECK_THROWS_AS(smooth(level, c, cache), std::invalid_argument);
  c.steps = 1;
  c.omega = 0.0;
  CHECK_THROWS_AS(smooth(level, c, cache), std::invalid_argument);
  c.omega = 1.5;
  CHECK_THROWS_AS(smooth(level, c, cache), std::invalid_argument);
  c.omega = 1.0;
  c.block_dims = {0, 1, 1};
  CHECK_THROWS_AS(smooth(level, c, cache), std::invalid_argument);
  CHECK(SmootherConfig::for_scheme(Scheme::ChaoticBlockGS).omega == 1.0);
  CHECK(SmootherConfig{}.omega == 0.8);
}

TEST_CASE("Jacobi trades buffer roles instead of copying") {
  auto level = single_patch_level({4, 4, 4});
  fill_random(level, 2);
  const double* u_before = level[0].u().data();
  const double* v_before = level[0].v().data();
  InverseCache<double> cache;
  refresh_ghosts(level);
  smooth_jacobi_step(level, config(Scheme::BlockJacobi, {2, 2, 2}), cache);
  CHECK(level[0].u().data() == v_before);
  CHECK(level[0].v().data() == u_before);
}

TEST_CASE("residual history on 64^3 / 8^3 decreases for both schemes") {
  for (auto scheme : {Scheme::BlockJacobi, Scheme::ChaoticBlockGS}) {
    auto level = single_patch_level({64, 64, 64});
    fill_random(level, 42);
    InverseCache<double> cache;
    StepTimings timings;
    const auto h = smooth(level, config(scheme, {8, 8, 8}, 3), cache, &timings);
    CHECK(std::all_of(h.begin(), h.end(), [](double r) { return r > 0.0; }));
    CHECK(h[3] / h[0] < 1.0);
    CHECK(timings.ghost_seconds > 0.0);
  }
}
