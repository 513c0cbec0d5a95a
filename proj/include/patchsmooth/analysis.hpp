#pragma once

// Convergence instrumentation: relative error, windowed convergence factors,
// dense iteration-matrix oracles and the block-size study driver.

#include "patchsmooth/grid.hpp"
#include "patchsmooth/runtime.hpp"
#include "patchsmooth/smoother.hpp"
#include "patchsmooth/stencil.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace patchsmooth {

/// history[k] / history[0]. Throws std::domain_error on a zero initial
/// residual and std::out_of_range if k is past the end.
double relative_error(std::span<const double> history, std::size_t k);

/// (history[start+length] / history[start])^(1/length).
double convergence_factor(std::span<const double> history, std::size_t start, std::size_t length);

/// Windowed factor plus the spread of the single-step ratios inside the
/// window (chaotic runs jitter from step to step).
struct WindowStats {
  std::size_t start = 0;
  std::size_t length = 0;
  double factor = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

WindowStats window_stats(std::span<const double> history, std::size_t start, std::size_t length);

/// Which diagonal blocks the splitting matrix carries.
enum class DiagonalBlocks {
  /// The blocks the smoother inverts (assemble_block_matrix). Under the
  /// CellFace closure the boundary diagonal term is lagged into N.
  Stencil,
  /// The diagonal blocks of the closed patch operator. Same as Stencil under
  /// the GhostCenter closure.
  Exact,
};

/// Dense M of the splitting A = M - N for one isolated patch, blocks in
/// lexicographic order: block diagonal (Jacobi) or block lower triangular
/// (Gauss-Seidel). Cells are ordered like assemble_patch_matrix.
DenseMatrix<double> splitting_matrix(const Stencil7d& stencil, const PatchDims& dims,
                                     Index3 block_dims, Scheme scheme,
                                     DiagonalBlocks diagonal = DiagonalBlocks::Stencil,
                                     DirichletClosure closure = DirichletClosure::GhostCenter);

inline constexpr std::int64_t kMaxOracleCells = 4096;
inline constexpr Eigen::Index kOracleSubspace = 4;

struct OracleOptions {
  double tolerance = 1e-8;
  int max_iterations = 50000;
  DiagonalBlocks diagonal = DiagonalBlocks::Stencil;
  DirichletClosure closure = DirichletClosure::GhostCenter;
  std::uint64_t seed = 1;
};

struct SpectralEstimate {
  double radius = 0.0;
  double relative_change = 0.0;  // last |est_k - est_{k-1}| / est_k
  int iterations = 0;
  bool converged = false;
};

/// Subspace power-iteration estimate of rho(I - omega M^{-1} A) on the dense
/// operators of a single patch of at most kMaxOracleCells cells. A run that
/// hits max_iterations returns its last estimate with converged == false.
SpectralEstimate spectral_radius_oracle(const Stencil7d& stencil, const PatchDims& dims,
                                        Index3 block_dims, Scheme scheme, double omega,
                                        const OracleOptions& options = {});

/// (2,2,2), (4,2,2), (4,4,2), (4,4,4), (8,4,4), (8,8,4), (8,8,8): x grows
/// first because x is the unit-stride axis.
std::vector<Index3> default_block_sizes();

/// Uniform [0,1) initial guess on every interior cell, patches in order,
/// cells lexicographic.
void fill_random(LevelXd& level, std::uint64_t seed);

struct StudyOptions {
  PatchDims patch{{64, 64, 64}, 1};
  DirichletClosure closure = DirichletClosure::GhostCenter;
  std::vector<Index3> block_sizes = default_block_sizes();
  std::vector<Scheme> schemes{Scheme::BlockJacobi, Scheme::ChaoticBlockGS};
  int steps = 3;
  std::uint64_t seed = 42;
  ExecutionStrategy strategy;
  std::optional<double> omega;  // scheme default when unset
  std::size_t window_start = 400;
  std::size_t window_length = 100;
};

struct StudyReport {
  Scheme scheme = Scheme::BlockJacobi;
  Index3 block_dims;
  PatchDims patch_dims;
  std::uint64_t seed = 0;
  double omega = 0.0;
  std::vector<double> residual_history;
  std::map<std::size_t, double> relative_error_at;
  std::optional<WindowStats> asymptotic;  // set when the run covers the window
};

/// One smoothing run per (scheme, block size) on a single patch with f = 0
/// and the same seeded random initial guess for every configuration.
std::vector<StudyReport> run_convergence_study(const StudyOptions& options);

}  // namespace patchsmooth
