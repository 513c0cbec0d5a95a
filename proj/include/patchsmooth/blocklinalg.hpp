#pragma once

// Small dense linear algebra for diagonal blocks: explicit inversion, the
// block matrix-vector product, and a cache of inverses keyed by block shape.

#include "patchsmooth/grid.hpp"
#include "patchsmooth/stencil.hpp"

#include <Eigen/Core>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace patchsmooth {

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative pivot threshold: a pivot smaller than this times the infinity
/// norm of the input counts as singular.
inline constexpr double kPivotTolerance = 1e-14;

/// Inverse via LU with partial (row) pivoting followed by one forward and
/// back substitution per column of the identity.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> invert_dense(const Eigen::MatrixBase<Derived>& a_in) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  if (a_in.rows() != a_in.cols() || a_in.rows() == 0) {
    throw std::invalid_argument("invert_dense needs a nonempty square matrix");
  }
  const Eigen::Index n = a_in.rows();
  DenseMatrix<Scalar> lu = a_in;
  if (!lu.allFinite()) throw std::invalid_argument("invert_dense: non-finite entry");

  const Scalar norm_inf = lu.cwiseAbs().rowwise().sum().maxCoeff();
  const Scalar tiny = Scalar(kPivotTolerance) * norm_inf;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;

  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index p = k;
    Scalar best = abs(lu(k, k));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      if (abs(lu(i, k)) > best) {
        best = abs(lu(i, k));
        p = i;
      }
    }
    if (!(best >= tiny) || best == Scalar(0)) {
      throw SingularMatrixError("pivot " + std::to_string(static_cast<double>(best)) +
                                " at column " + std::to_string(k) +
                                " below tolerance; matrix is singular to working precision");
    }
    if (p != k) {
      lu.row(k).swap(lu.row(p));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(p)]);
    }
    const Scalar pivot = lu(k, k);
    for (Eigen::Index i = k + 1; i < n; ++i) lu(i, k) /= pivot;
    // Rank-one update of the trailing block, column by column.
    for (Eigen::Index j = k + 1; j < n; ++j) {
      const Scalar ukj = lu(k, j);
      if (ukj == Scalar(0)) continue;
      for (Eigen::Index i = k + 1; i < n; ++i) lu(i, j) -= lu(i, k) * ukj;
    }
  }

  // Column c of the inverse solves L U x = P e_c.
  DenseMatrix<Scalar> inv(n, n);
  DenseVector<Scalar> x(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = perm[static_cast<std::size_t>(i)] == c ? Scalar(1) : Scalar(0);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const Scalar xj = x[j];
      if (xj == Scalar(0)) continue;
      for (Eigen::Index i = j + 1; i < n; ++i) x[i] -= lu(i, j) * xj;
    }
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      x[j] /= lu(j, j);
      const Scalar xj = x[j];
      for (Eigen::Index i = 0; i < j; ++i) x[i] -= lu(i, j) * xj;
    }
    inv.col(c) = x;
  }
  return inv;
}

/// y = M x. Every y_i is accumulated over j in ascending order, which makes
/// results independent of the thread that computes them.
template <typename DerivedM, typename DerivedX, typename DerivedY>
void matvec(const Eigen::MatrixBase<DerivedM>& m, const Eigen::MatrixBase<DerivedX>& x,
            const Eigen::MatrixBase<DerivedY>& y_out) {
  using Scalar = typename DerivedM::Scalar;
  auto& y = const_cast<Eigen::MatrixBase<DerivedY>&>(y_out).derived();
  const Eigen::Index n = m.cols();
  if (x.size() != n || y.size() != m.rows()) {
    throw std::invalid_argument("matvec: length mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(n) + ")");
  }
  const Eigen::Index rows = m.rows();
  for (Eigen::Index i = 0; i < rows; ++i) y.coeffRef(i) = Scalar(0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar xj = x.coeff(j);
    for (Eigen::Index i = 0; i < rows; ++i) y.coeffRef(i) += m.coeff(i, j) * xj;
  }
}

template <typename DerivedM, typename DerivedX>
DenseVector<typename DerivedM::Scalar> matvec(const Eigen::MatrixBase<DerivedM>& m,
                                              const Eigen::MatrixBase<DerivedX>& x) {
  DenseVector<typename DerivedM::Scalar> y(m.rows());
  matvec(m, x, y);
  return y;
}

/// Inverses of diagonal blocks for one stencil, keyed by block extent.
/// Lookups run concurrently; a miss inverts under an exclusive lock so each
/// shape is inverted at most once. Entries are never evicted, so returned
/// references stay valid for the cache lifetime.
template <typename Scalar>
class InverseCache {
 public:
  using Matrix = DenseMatrix<Scalar>;

  explicit InverseCache(Stencil7<Scalar> stencil = {}) : stencil_(stencil) {
    stencil_.validate();
  }

  InverseCache(const InverseCache&) = delete;
  InverseCache& operator=(const InverseCache&) = delete;

  const Stencil7<Scalar>& stencil() const { return stencil_; }

  const Matrix& get(Index3 extent) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = entries_.find(extent); it != entries_.end()) return *it->second;
    }
    std::unique_lock lock(mutex_);
    if (auto it = entries_.find(extent); it != entries_.end()) return *it->second;
    auto inv = std::make_unique<const Matrix>(invert_dense(assemble_block_matrix(stencil_, extent)));
    inversions_.fetch_add(1, std::memory_order_relaxed);
    auto [it, inserted] = entries_.emplace(extent, std::move(inv));
    return *it->second;
  }

  /// Same as get() but also checks the stencil matches the one the cache
  /// was built for.
  const Matrix& get(const Stencil7<Scalar>& stencil, Index3 extent) {
    if (!(stencil == stencil_)) {
      throw std::invalid_argument("inverse cache was built for a different stencil");
    }
    return get(extent);
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  std::vector<Index3> shapes() const {
    std::shared_lock lock(mutex_);
    std::vector<Index3> out;
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
  }

  /// Number of inversions performed so far.
  std::uint64_t inversions() const { return inversions_.load(std::memory_order_relaxed); }

 private:
  Stencil7<Scalar> stencil_;
  mutable std::shared_mutex mutex_;
  std::map<Index3, std::unique_ptr<const Matrix>> entries_;
  std::atomic<std::uint64_t> inversions_{0};
};

/// Upper bound on distinct block shapes over arbitrary patch sizes.
constexpr std::int64_t max_block_shapes(Index3 block_dims) { return block_dims.product(); }

}  // namespace patchsmooth
