#include "patchsmooth/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace patchsmooth {

double relative_error(std::span<const double> history, std::size_t k) {
  if (k >= history.size()) {
    throw std::out_of_range("relative_error: step " + std::to_string(k) + " not recorded");
  }
  if (!(history[0] > 0.0)) throw std::domain_error("relative_error: zero initial residual");
  return history[k] / history[0];
}

double convergence_factor(std::span<const double> history, std::size_t start,
                          std::size_t length) {
  if (length == 0) throw std::invalid_argument("convergence_factor: empty window");
  if (start + length >= history.size()) {
    throw std::out_of_range("convergence_factor: window past end of history");
  }
  if (!(history[start] > 0.0)) {
    throw std::domain_error("convergence_factor: nonpositive residual at window start");
  }
  if (history[start + length] < 0.0) {
    throw std::domain_error("convergence_factor: negative residual");
  }
  return std::pow(history[start + length] / history[start], 1.0 / static_cast<double>(length));
}

WindowStats window_stats(std::span<const double> history, std::size_t start, std::size_t length) {
  WindowStats w{start, length, convergence_factor(history, start, length), 0.0, 0.0};
  w.min_ratio = w.max_ratio = history[start + 1] / history[start];
  for (std::size_t i = start + 1; i < start + length; ++i) {
    const double r = history[i + 1] / history[i];
    w.min_ratio = std::min(w.min_ratio, r);
    w.max_ratio = std::max(w.max_ratio, r);
  }
  return w;
}

DenseMatrix<double> splitting_matrix(const Stencil7d& stencil, const PatchDims& dims,
                                     Index3 block_dims, Scheme scheme, DiagonalBlocks diagonal,
                                     DirichletClosure closure) {
  const auto a = assemble_patch_matrix(stencil, dims, closure);
  const auto dec = decompose_blocks(dims, block_dims);
  const Eigen::Index m = a.rows();

  std::vector<std::size_t> owner(static_cast<std::size_t>(m));
  for (std::size_t b = 0; b < dec.ranges.size(); ++b) {
    const auto& r = dec.ranges[b];
    for (auto k = r.lo.z; k < r.lo.z + r.extent.z; ++k) {
      for (auto j = r.lo.y; j < r.lo.y + r.extent.y; ++j) {
        for (auto i = r.lo.x; i < r.lo.x + r.extent.x; ++i) {
          owner[static_cast<std::size_t>(global_index(dims, {i, j, k}, false))] = b;
        }
      }
    }
  }

  DenseMatrix<double> mat = DenseMatrix<double>::Zero(m, m);
  for (Eigen::Index col = 0; col < m; ++col) {
    for (Eigen::Index row = 0; row < m; ++row) {
      const auto br = owner[static_cast<std::size_t>(row)];
      const auto bc = owner[static_cast<std::size_t>(col)];
      const bool keep = br == bc || (scheme == Scheme::ChaoticBlockGS && bc < br);
      if (keep) mat(row, col) = a(row, col);
    }
  }
  if (diagonal == DiagonalBlocks::Stencil) {
    for (Eigen::Index i = 0; i < m; ++i) mat(i, i) = stencil.center;
  }
  return mat;
}

SpectralEstimate spectral_radius_oracle(const Stencil7d& stencil, const PatchDims& dims,
                                        Index3 block_dims, Scheme scheme, double omega,
                                        const OracleOptions& options) {
  validate(dims);
  if (dims.interior_cells() > kMaxOracleCells) {
    throw std::length_error("spectral radius oracle limited to " +
                            std::to_string(kMaxOracleCells) + " cells");
  }
  const auto a = assemble_patch_matrix(stencil, dims, options.closure);
  const auto m_split =
      splitting_matrix(stencil, dims, block_dims, scheme, options.diagonal, options.closure);
  const Eigen::Index m = a.rows();

  DenseMatrix<double> e = -omega * Eigen::PartialPivLU<DenseMatrix<double>>(m_split).solve(a);
  e.diagonal().array() += 1.0;

  // Subspace iteration with Rayleigh-Ritz: a single vector never settles
  // when the dominant eigenvalues are a complex pair, as they are for
  // Gauss-Seidel splittings.
  const Eigen::Index s = std::min<Eigen::Index>(kOracleSubspace, m);
  std::mt19937_64 gen(options.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DenseMatrix<double> q(m, s);
  for (Eigen::Index j = 0; j < s; ++j)
    for (Eigen::Index i = 0; i < m; ++i) q(i, j) = dist(gen);
  auto orthonormalize = [&](const DenseMatrix<double>& x) {
    Eigen::HouseholderQR<DenseMatrix<double>> qr(x);
    return DenseMatrix<double>(qr.householderQ() * DenseMatrix<double>::Identity(m, s));
  };
  q = orthonormalize(q);

  // Below this magnitude the operator is zero up to rounding.
  constexpr double kZeroRadius = 1e-12;
  SpectralEstimate est;
  double prev = 0.0;
  DenseMatrix<double> y(m, s);
  for (int it = 1; it <= options.max_iterations; ++it) {
    y.noalias() = e * q;
    est.iterations = it;
    if (y.norm() < kZeroRadius) {
      est.radius = 0.0;
      est.relative_change = 0.0;
      est.converged = true;
      return est;
    }
    const DenseMatrix<double> h = q.transpose() * y;
    est.radius = Eigen::EigenSolver<DenseMatrix<double>>(h, false).eigenvalues().cwiseAbs().maxCoeff();
    est.relative_change = std::abs(est.radius - prev) / est.radius;
    if (it > 1 && est.relative_change < options.tolerance) {
      est.converged = true;
      return est;
    }
    prev = est.radius;
    q = orthonormalize(y);
  }
  return est;
}

std::vector<Index3> default_block_sizes() {
  return {{2, 2, 2}, {4, 2, 2}, {4, 4, 2}, {4, 4, 4}, {8, 4, 4}, {8, 8, 4}, {8, 8, 8}};
}

void fill_random(LevelXd& level, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (auto& patch : level.patches()) {
    const auto& d = patch.dims();
    for (std::int64_t k = 0; k < d.nz(); ++k) {
      for (std::int64_t j = 0; j < d.ny(); ++j) {
        for (std::int64_t i = 0; i < d.nx(); ++i) patch.at(i, j, k) = dist(gen);
      }
    }
  }
}

std::vector<StudyReport> run_convergence_study(const StudyOptions& options) {
  validate(options.patch);
  if (options.steps < 1) throw std::invalid_argument("study needs at least one step");
  const Stencil7d stencil;
  InverseCache<double> cache(stencil);
  std::vector<StudyReport> reports;
  for (Scheme scheme : options.schemes) {
    for (const Index3& block : options.block_sizes) {
      SmootherConfig config = SmootherConfig::for_scheme(scheme);
      if (options.omega) config.omega = *options.omega;
      config.steps = options.steps;
      config.block_dims = block;
      config.strategy = options.strategy;
      config.seed = options.seed;

      std::vector<PatchXd> patches;
      patches.emplace_back(options.patch, Index3{});
      LevelXd level(std::move(patches), options.closure);
      fill_random(level, options.seed);

      StudyReport report;
      report.scheme = scheme;
      report.block_dims = block;
      report.patch_dims = options.patch;
      report.seed = options.seed;
      report.omega = config.omega;
      report.residual_history = smooth(level, config, cache);
      for (std::size_t k = 0; k < report.residual_history.size(); ++k) {
        report.relative_error_at[k] = relative_error(report.residual_history, k);
      }
      if (options.window_length > 0 &&
          options.window_start + options.window_length < report.residual_history.size()) {
        report.asymptotic =
            window_stats(report.residual_history, options.window_start, options.window_length);
      }
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

}  // namespace patchsmooth
