#pragma once

// Constant-coefficient 7-point operator.

#include "patchsmooth/grid.hpp"

#include <Eigen/Core>

#include <array>
#include <stdexcept>

namespace patchsmooth {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Face coefficients are ordered -x, +x, -y, +y, -z, +z.
template <typename Scalar>
struct Stencil7 {
  Scalar center = Scalar(6);
  std::array<Scalar, 6> face{Scalar(-1), Scalar(-1), Scalar(-1),
                             Scalar(-1), Scalar(-1), Scalar(-1)};

  void validate() const {
    if (!(center > Scalar(0))) throw std::invalid_argument("stencil center must be positive");
  }

  friend bool operator==(const Stencil7&, const Stencil7&) = default;
};

using Stencil7d = Stencil7<double>;

namespace detail {

/// Reads a solution value. The chaotic sweep swaps this for a relaxed atomic
/// load.
struct PlainLoad {
  template <typename Scalar>
  Scalar operator()(const Scalar* u, std::int64_t i) const {
    return u[i];
  }
};

/// c*u0 + sum of face terms in the fixed order -x,+x,-y,+y,-z,+z.
template <typename Scalar, typename Load>
Scalar stencil_at(const Stencil7<Scalar>& s, const Scalar* u, std::int64_t o, std::int64_t sy,
                  std::int64_t sz, Load load) {
  Scalar acc = s.center * load(u, o);
  acc += s.face[0] * load(u, o - 1);
  acc += s.face[1] * load(u, o + 1);
  acc += s.face[2] * load(u, o - sy);
  acc += s.face[3] * load(u, o + sy);
  acc += s.face[4] * load(u, o - sz);
  acc += s.face[5] * load(u, o + sz);
  return acc;
}

/// Writes f - A u over `block` into `r` (lexicographic within the block).
template <typename Scalar, typename Load, typename Out>
void block_residual_into(const Stencil7<Scalar>& s, const Patch<Scalar>& patch,
                         const BlockRange& block, Out& r, Load load) {
  const Scalar* u = patch.u().data();
  const auto sy = patch.stride_y();
  const auto sz = patch.stride_z();
  Eigen::Index l = 0;
  for (std::int64_t k = block.lo.z; k < block.lo.z + block.extent.z; ++k) {
    for (std::int64_t j = block.lo.y; j < block.lo.y + block.extent.y; ++j) {
      std::int64_t o = patch.offset(block.lo.x, j, k);
      std::int64_t fo = patch.rhs_offset(block.lo.x, j, k);
      for (std::int64_t i = 0; i < block.extent.x; ++i, ++o, ++fo, ++l) {
        r[l] = patch.f()[fo] - stencil_at(s, u, o, sy, sz, load);
      }
    }
  }
}

inline void check_interior(const PatchDims& dims, Index3 c) {
  if (c.x < 0 || c.y < 0 || c.z < 0 || c.x >= dims.nx() || c.y >= dims.ny() || c.z >= dims.nz()) {
    throw std::out_of_range("cell " + to_string(c) + " outside patch " + to_string(dims.cells));
  }
}

}  // namespace detail

/// (A u) at an interior cell; ghost cells supply neighbors outside the
/// interior and must already be filled.
template <typename Scalar>
Scalar apply_stencil(const Stencil7<Scalar>& s, const Patch<Scalar>& patch, Index3 cell) {
  detail::check_interior(patch.dims(), cell);
  return detail::stencil_at(s, patch.u().data(), patch.offset(cell.x, cell.y, cell.z),
                            patch.stride_y(), patch.stride_z(), detail::PlainLoad{});
}

/// r_b = f_b - (A u)_b including couplings to cells outside the block.
template <typename Scalar>
DenseVector<Scalar> block_residual(const Stencil7<Scalar>& s, const Patch<Scalar>& patch,
                                   const BlockRange& block) {
  const auto& d = patch.dims();
  if (block.extent.x < 1 || block.extent.y < 1 || block.extent.z < 1) {
    throw std::invalid_argument("empty block");
  }
  detail::check_interior(d, block.lo);
  detail::check_interior(d, block.lo + block.extent - Index3{1, 1, 1});
  DenseVector<Scalar> r(block.size());
  detail::block_residual_into(s, patch, block, r, detail::PlainLoad{});
  return r;
}

/// Diagonal block A_b for a box of the given extent: couplings that leave
/// the box are dropped.
template <typename Scalar>
DenseMatrix<Scalar> assemble_block_matrix(const Stencil7<Scalar>& s, Index3 extent) {
  if (extent.x < 1 || extent.y < 1 || extent.z < 1) {
    throw std::invalid_argument("block extent must be positive, got " + to_string(extent));
  }
  const Eigen::Index n = extent.product();
  DenseMatrix<Scalar> a = DenseMatrix<Scalar>::Zero(n, n);
  auto idx = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    return static_cast<Eigen::Index>(i + extent.x * (j + extent.y * k));
  };
  for (std::int64_t k = 0; k < extent.z; ++k) {
    for (std::int64_t j = 0; j < extent.y; ++j) {
      for (std::int64_t i = 0; i < extent.x; ++i) {
        const auto row = idx(i, j, k);
        a(row, row) = s.center;
        if (i > 0) a(row, idx(i - 1, j, k)) = s.face[0];
        if (i + 1 < extent.x) a(row, idx(i + 1, j, k)) = s.face[1];
        if (j > 0) a(row, idx(i, j - 1, k)) = s.face[2];
        if (j + 1 < extent.y) a(row, idx(i, j + 1, k)) = s.face[3];
        if (k > 0) a(row, idx(i, j, k - 1)) = s.face[4];
        if (k + 1 < extent.z) a(row, idx(i, j, k + 1)) = s.face[5];
      }
    }
  }
  return a;
}

inline constexpr std::int64_t kMaxDensePatchCells = 32768;

/// Whole-patch operator for a single isolated patch with the ghost closure
/// folded in: under CellFace a ghost equal to -interior adds -face to the
/// diagonal, under GhostCenter the boundary coupling simply vanishes. This is
/// the linear map realized by fill_physical_ghosts followed by apply_stencil.
/// Testing facility; refuses more than kMaxDensePatchCells unknowns.
template <typename Scalar>
DenseMatrix<Scalar> assemble_patch_matrix(const Stencil7<Scalar>& s, const PatchDims& dims,
                                          DirichletClosure closure = DirichletClosure::GhostCenter) {
  validate(dims);
  const auto m = dims.interior_cells();
  if (m > kMaxDensePatchCells) {
    throw std::length_error("dense patch matrix limited to " +
                            std::to_string(kMaxDensePatchCells) + " cells, got " +
                            std::to_string(m));
  }
  const Index3 n = dims.cells;
  DenseMatrix<Scalar> a = DenseMatrix<Scalar>::Zero(m, m);
  auto idx = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
    return static_cast<Eigen::Index>(i + n.x * (j + n.y * k));
  };
  for (std::int64_t k = 0; k < n.z; ++k) {
    for (std::int64_t j = 0; j < n.y; ++j) {
      for (std::int64_t i = 0; i < n.x; ++i) {
        const auto row = idx(i, j, k);
        Scalar diag = s.center;
        const Index3 c{i, j, k};
        for (int f = 0; f < 6; ++f) {
          const int ax = f / 2;
          Index3 nb = c;
          nb[ax] += (f % 2 == 0) ? -1 : 1;
          if (nb[ax] < 0 || nb[ax] >= n[ax]) {
            if (closure == DirichletClosure::CellFace) diag -= s.face[f];
          } else {
            a(row, idx(nb.x, nb.y, nb.z)) = s.face[f];
          }
        }
        a(row, row) = diag;
      }
    }
  }
  return a;
}

}  // namespace patchsmooth
