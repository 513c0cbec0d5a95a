#pragma once

// Helpers shared by the test binaries. The oracles here are deliberately
// written without the library's own kernels: plain loops over dense
// matrices, Eigen's factorizations and brute-force enumeration.

#include "patchsmooth/analysis.hpp"
#include "patchsmooth/grid.hpp"
#include "patchsmooth/stencil.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace testsupport {

using patchsmooth::DenseMatrix;
using patchsmooth::DenseVector;
using patchsmooth::Index3;
using patchsmooth::LevelXd;
using patchsmooth::PatchDims;
using patchsmooth::PatchXd;
using Mat = DenseMatrix<double>;
using Vec = DenseVector<double>;

inline LevelXd single_patch_level(
    Index3 cells, patchsmooth::DirichletClosure closure = patchsmooth::DirichletClosure::GhostCenter) {
  std::vector<PatchXd> patches;
  patches.emplace_back(PatchDims{cells, 1}, Index3{});
  return LevelXd(std::move(patches), closure);
}

inline Vec random_vector(Eigen::Index n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

/// Interior values of u, x fastest.
inline Vec interior(const PatchXd& p) {
  const auto& d = p.dims();
  Vec out(d.interior_cells());
  Eigen::Index l = 0;
  for (std::int64_t k = 0; k < d.nz(); ++k)
    for (std::int64_t j = 0; j < d.ny(); ++j)
      for (std::int64_t i = 0; i < d.nx(); ++i) out[l++] = p.at(i, j, k);
  return out;
}

inline void set_interior(PatchXd& p, const Vec& x) {
  const auto& d = p.dims();
  Eigen::Index l = 0;
  for (std::int64_t k = 0; k < d.nz(); ++k)
    for (std::int64_t j = 0; j < d.ny(); ++j)
      for (std::int64_t i = 0; i < d.nx(); ++i) p.at(i, j, k) = x[l++];
}

inline void set_rhs(PatchXd& p, const Vec& f) {
  for (Eigen::Index i = 0; i < f.size(); ++i) p.f()[i] = f[i];
}

/// Reference product with the same per-row ascending-j order the library
/// promises.
inline Vec naive_matvec(const Mat& m, const Vec& x) {
  Vec y(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) acc += m(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

/// Block index of every interior cell (x fastest), computed from the block
/// grid directly rather than from decompose_blocks.
inline std::vector<std::int64_t> block_owner(Index3 n, Index3 b) {
  const Index3 nb{(n.x + b.x - 1) / b.x, (n.y + b.y - 1) / b.y, (n.z + b.z - 1) / b.z};
  std::vector<std::int64_t> owner;
  owner.reserve(static_cast<std::size_t>(n.product()));
  for (std::int64_t k = 0; k < n.z; ++k)
    for (std::int64_t j = 0; j < n.y; ++j)
      for (std::int64_t i = 0; i < n.x; ++i)
        owner.push_back(i / b.x + nb.x * (j / b.y + nb.y * (k / b.z)));
  return owner;
}

/// M of the splitting read off a dense operator: entries coupling two cells
/// of the same block, plus (for Gauss-Seidel) entries whose column block
/// precedes the row block. `diag` overrides the diagonal when set.
inline Mat splitting_from(const Mat& a, Index3 n, Index3 b, bool lower,
                          std::optional<double> diag = std::nullopt) {
  const auto owner = block_owner(n, b);
  Mat m = Mat::Zero(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      const auto br = owner[static_cast<std::size_t>(r)];
      const auto bc = owner[static_cast<std::size_t>(c)];
      if (br == bc || (lower && bc < br)) m(r, c) = a(r, c);
    }
  }
  if (diag) m.diagonal().setConstant(*diag);
  return m;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline double inf_norm(const Mat& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

/// Optimal makespan by enumerating every assignment of patches to workers.
inline std::int64_t brute_force_makespan(const std::vector<std::int64_t>& loads, int workers) {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::vector<int> assign(loads.size(), 0);
  while (true) {
    std::vector<std::int64_t> bins(static_cast<std::size_t>(workers), 0);
    for (std::size_t i = 0; i < loads.size(); ++i) bins[static_cast<std::size_t>(assign[i])] += loads[i];
    best = std::min(best, *std::max_element(bins.begin(), bins.end()));
    std::size_t pos = 0;
    while (pos < assign.size() && ++assign[pos] == workers) assign[pos++] = 0;
    if (pos == assign.size()) break;
  }
  return best;
}

}  // namespace testsupport
