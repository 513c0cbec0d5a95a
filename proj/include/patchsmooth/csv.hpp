#pragma once

// CSV output for convergence histories and benchmark records. Comma
// separated, '\n' line ends, header always present, floating values with 17
// significant digits so they parse back to the same double.

#include "patchsmooth/analysis.hpp"
#include "patchsmooth/bench.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace patchsmooth {

std::string format_double(double v);

inline constexpr const char* kConvergenceHeader =
    "scheme,block,patch,seed,step,residual_l2,relative_error";
inline constexpr const char* kBenchHeader =
    "patch_spec,block,scheme,strategy,p,q,steps,wall_seconds,cells_per_second,ghost_seconds,"
    "speedup,efficiency";

struct ConvergenceRow {
  std::string scheme;
  std::string block;
  std::string patch;
  std::uint64_t seed = 0;
  std::size_t step = 0;
  double residual_l2 = 0.0;
  double relative_error = 0.0;

  friend bool operator==(const ConvergenceRow&, const ConvergenceRow&) = default;
};

/// One row per recorded step, step 0 included.
std::vector<ConvergenceRow> convergence_rows(const StudyReport& report);
std::vector<ConvergenceRow> convergence_rows(Scheme scheme, Index3 block, const std::string& patch,
                                             std::uint64_t seed, std::span<const double> history);

void write_convergence_csv(std::ostream& os, std::span<const ConvergenceRow> rows);
void write_convergence_csv(std::ostream& os, std::span<const StudyReport> reports);
void write_bench_csv(std::ostream& os, std::span<const BenchRecord> records);

std::vector<ConvergenceRow> read_convergence_csv(std::istream& is);

/// Replaces the file at `path`; throws std::runtime_error on I/O failure.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace patchsmooth
