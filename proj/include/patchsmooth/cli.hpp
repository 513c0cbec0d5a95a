#pragma once

// Command-line front end: argument parsing into a validated RunSpec and the
// subcommand drivers.

#include "patchsmooth/bench.hpp"
#include "patchsmooth/runtime.hpp"
#include "patchsmooth/smoother.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace patchsmooth::cli {

enum class Subcommand { Converge, Smooth, Bench, Inverses };

struct RunSpec {
  Subcommand subcommand = Subcommand::Converge;
  std::vector<Index3> patch_sizes{{64, 64, 64}};
  std::int64_t num_patches = 1;
  bool mixed_table2 = false;
  Index3 block_dims{8, 8, 8};
  bool block_size_given = false;
  Scheme scheme = Scheme::BlockJacobi;
  DirichletClosure closure = DirichletClosure::GhostCenter;
  double omega = default_omega(Scheme::BlockJacobi);
  int steps = 3;
  StrategyKind strategy = StrategyKind::Serial;
  int patch_workers = 1;
  int block_workers = 1;
  std::uint64_t seed = 42;
  std::size_t window_start = 400;
  std::size_t window_length = 100;
  int repeat = 3;
  std::string out;  // empty: standard output

  ExecutionStrategy execution() const;
  SmootherConfig smoother_config() const;
  PatchSetSpec patch_set() const;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by parse_args for --help; what() holds the help text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses argv-style arguments (without the program name). Throws UsageError
/// on unknown flags, malformed values or an inconsistent combination.
RunSpec parse_args(const std::vector<std::string>& args);

/// Executes the subcommand; CSV goes to spec.out or `out`, progress to `log`.
void run(const RunSpec& spec, std::ostream& out, std::ostream& log);

/// Parses "AxBxC".
Index3 parse_triple(const std::string& text);

}  // namespace patchsmooth::cli
