#include "patchsmooth/cli.hpp"

#include "patchsmooth/analysis.hpp"
#include "patchsmooth/blocklinalg.hpp"
#include "patchsmooth/csv.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <ostream>
#include <regex>
#include <sstream>

namespace patchsmooth::cli {

Index3 parse_triple(const std::string& text) {
  static const std::regex pattern(R"((\d+)x(\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) {
    throw UsageError("expected AxBxC, got '" + text + "'");
  }
  Index3 v;
  for (int a = 0; a < 3; ++a) {
    try {
      v[a] = std::stoll(m[a + 1].str());
    } catch (const std::exception&) {
      throw UsageError("extent out of range in '" + text + "'");
    }
    if (v[a] < 1) throw UsageError("extents must be positive in '" + text + "'");
  }
  return v;
}

ExecutionStrategy RunSpec::execution() const {
  ExecutionStrategy s;
  s.kind = strategy;
  s.patch_workers = patch_workers;
  s.block_workers = block_workers;
  return s;
}

SmootherConfig RunSpec::smoother_config() const {
  SmootherConfig c = SmootherConfig::for_scheme(scheme);
  c.omega = omega;
  c.steps = steps;
  c.block_dims = block_dims;
  c.strategy = execution();
  c.seed = seed;
  return c;
}

PatchSetSpec RunSpec::patch_set() const {
  if (mixed_table2) return PatchSetSpec::mixed_table2();
  PatchSetSpec s;
  for (const auto& size : patch_sizes) s.groups.push_back({size, num_patches});
  return s;
}

namespace {

struct RawOptions {
  std::vector<std::string> patch_sizes;
  std::int64_t num_patches = 1;
  bool mixed_table2 = false;
  std::string block_size = "8x8x8";
  std::string scheme = "jacobi";
  std::string closure = "ghost-center";
  double omega = 0.0;
  int steps = 3;
  std::string strategy = "serial";
  int patch_workers = 1;
  int block_workers = 1;
  std::uint64_t seed = 42;
  std::string window = "400,100";
  int repeat = 3;
  std::string out;
};

void add_options(CLI::App& app, RawOptions& o) {
  app.add_option("--patch-size", o.patch_sizes, "Patch extent AxBxC, repeatable (default 64x64x64)");
  app.add_option("--num-patches", o.num_patches, "Patches per listed size (default 1)");
  app.add_flag("--mixed-table2", o.mixed_table2, "16 patches each of 64^3, 72^3, 80^3, 88^3, 96^3");
  app.add_option("--block-size", o.block_size, "Spatial block AxBxC (default 8x8x8)");
  app.add_option("--scheme", o.scheme, "jacobi | chaotic-gs (default jacobi)");
  app.add_option("--closure", o.closure,
                 "Dirichlet ghost rule: ghost-center (ghost = 0) | cell-face (ghost = -interior)");
  app.add_option("--omega", o.omega, "Damping in (0,1] (default 0.8 jacobi, 1.0 chaotic-gs)");
  app.add_option("--steps", o.steps, "Smoothing steps (default 3)");
  app.add_option("--strategy", o.strategy, "serial | patch | block | two-level (default serial)");
  app.add_option("--patch-workers", o.patch_workers, "Patch workers p (default 1)");
  app.add_option("--block-workers", o.block_workers, "Block workers q (default 1)");
  app.add_option("--seed", o.seed, "Seed of the random initial guess (default 42)");
  app.add_option("--window", o.window, "Convergence-factor window I,K (default 400,100)");
  app.add_option("--repeat", o.repeat, "Timing repetitions, minimum kept (default 3)");
  app.add_option("--out", o.out, "Output CSV path (default stdout)");
}

RunSpec validate(Subcommand sub, const RawOptions& o, const CLI::App& app) {
  RunSpec spec;
  spec.subcommand = sub;
  auto given = [&](const char* flag) { return app.count(flag) > 0; };

  if (!o.patch_sizes.empty()) {
    spec.patch_sizes.clear();
    for (const auto& s : o.patch_sizes) spec.patch_sizes.push_back(parse_triple(s));
  }
  if (o.num_patches < 1) throw UsageError("--num-patches must be positive");
  spec.num_patches = o.num_patches;
  spec.mixed_table2 = o.mixed_table2;
  if (spec.mixed_table2 && (!o.patch_sizes.empty() || given("--num-patches"))) {
    throw UsageError("--mixed-table2 excludes --patch-size and --num-patches");
  }
  spec.block_dims = parse_triple(o.block_size);
  spec.block_size_given = given("--block-size");

  if (o.scheme == "jacobi") {
    spec.scheme = Scheme::BlockJacobi;
  } else if (o.scheme == "chaotic-gs") {
    spec.scheme = Scheme::ChaoticBlockGS;
  } else {
    throw UsageError("unknown scheme '" + o.scheme + "'");
  }
  if (o.closure == "ghost-center") {
    spec.closure = DirichletClosure::GhostCenter;
  } else if (o.closure == "cell-face") {
    spec.closure = DirichletClosure::CellFace;
  } else {
    throw UsageError("unknown closure '" + o.closure + "'");
  }
  spec.omega = given("--omega") ? o.omega : default_omega(spec.scheme);
  if (!(spec.omega > 0.0 && spec.omega <= 1.0)) throw UsageError("--omega must lie in (0, 1]");
  if (o.steps < 1) throw UsageError("--steps must be positive");
  spec.steps = o.steps;

  static const std::map<std::string, StrategyKind> strategies{
      {"serial", StrategyKind::Serial},
      {"patch", StrategyKind::PatchParallel},
      {"block", StrategyKind::BlockParallel},
      {"two-level", StrategyKind::TwoLevel}};
  const auto it = strategies.find(o.strategy);
  if (it == strategies.end()) throw UsageError("unknown strategy '" + o.strategy + "'");
  spec.strategy = it->second;
  if (o.patch_workers < 1 || o.block_workers < 1) throw UsageError("worker counts must be positive");
  const bool uses_p = spec.strategy == StrategyKind::PatchParallel || spec.strategy == StrategyKind::TwoLevel;
  const bool uses_q = spec.strategy == StrategyKind::BlockParallel || spec.strategy == StrategyKind::TwoLevel;
  if (given("--patch-workers") && !uses_p) {
    throw UsageError("--patch-workers needs --strategy patch or two-level");
  }
  if (given("--block-workers") && !uses_q) {
    throw UsageError("--block-workers needs --strategy block or two-level");
  }
  spec.patch_workers = uses_p ? o.patch_workers : 1;
  spec.block_workers = uses_q ? o.block_workers : 1;
  spec.seed = o.seed;

  static const std::regex window(R"((\d+),(\d+))");
  std::smatch m;
  if (!std::regex_match(o.window, m, window)) throw UsageError("--window expects I,K");
  spec.window_start = std::stoul(m[1].str());
  spec.window_length = std::stoul(m[2].str());
  if (spec.window_length < 1) throw UsageError("--window length must be positive");

  if (o.repeat < 1) throw UsageError("--repeat must be positive");
  spec.repeat = o.repeat;
  spec.out = o.out;

  if (sub == Subcommand::Converge && (spec.mixed_table2 || spec.patch_sizes.size() != 1 ||
                                      spec.num_patches != 1)) {
    throw UsageError("converge runs on a single patch");
  }
  return spec;
}

void emit(const RunSpec& spec, std::ostream& out, const std::string& text) {
  if (spec.out.empty()) {
    out << text;
  } else {
    write_text_file(spec.out, text);
  }
}

void run_converge(const RunSpec& spec, std::ostream& out, std::ostream& log) {
  StudyOptions opts;
  opts.patch = PatchDims{spec.patch_sizes.front(), 1};
  opts.closure = spec.closure;
  opts.block_sizes = spec.block_size_given ? std::vector<Index3>{spec.block_dims} : default_block_sizes();
  opts.schemes = {spec.scheme};
  opts.steps = spec.steps;
  opts.seed = spec.seed;
  opts.strategy = spec.execution();
  opts.omega = spec.omega;
  opts.window_start = spec.window_start;
  opts.window_length = spec.window_length;
  const auto reports = run_convergence_study(opts);
  for (const auto& r : reports) {
    log << to_string(r.scheme) << " block " << to_string(r.block_dims) << ": relative error "
        << format_double(r.relative_error_at.rbegin()->second) << " after " << spec.steps
        << " steps";
    if (r.asymptotic) {
      log << ", factor " << format_double(r.asymptotic->factor) << " [" << r.asymptotic->min_ratio
          << ", " << r.asymptotic->max_ratio << "]";
    }
    log << '\n';
  }
  std::ostringstream os;
  write_convergence_csv(os, std::span<const StudyReport>(reports));
  emit(spec, out, os.str());
}

void run_smooth(const RunSpec& spec, std::ostream& out, std::ostream& log) {
  const auto set = spec.patch_set();
  auto level = build_patch_set(set, max_cells_from_env(), spec.closure);
  fill_random(level, spec.seed);
  InverseCache<double> cache;
  const auto history = smooth(level, spec.smoother_config(), cache);
  log << level.size() << " patches, " << level.interior_cells() << " cells: residual "
      << format_double(history.front()) << " -> " << format_double(history.back()) << '\n';
  std::ostringstream os;
  write_convergence_csv(os, convergence_rows(spec.scheme, spec.block_dims, set.label(), spec.seed, history));
  emit(spec, out, os.str());
}

void run_bench_cmd(const RunSpec& spec, std::ostream& out, std::ostream& log) {
  const auto set = spec.patch_set();
  auto level = build_patch_set(set, max_cells_from_env(), spec.closure);
  std::vector<SmootherConfig> configs;
  auto serial = spec.smoother_config();
  serial.strategy = ExecutionStrategy::serial();
  configs.push_back(serial);
  if (spec.strategy != StrategyKind::Serial) configs.push_back(spec.smoother_config());
  const auto records = run_bench(level, set.label(), configs, spec.repeat);
  for (const auto& r : records) {
    log << to_string(r.strategy) << " p=" << r.patch_workers << " q=" << r.block_workers << ": "
        << format_double(r.wall_seconds) << " s, " << r.cells_per_second / 1e6 << " Mcells/s\n";
  }
  std::ostringstream os;
  write_bench_csv(os, records);
  emit(spec, out, os.str());
}

void run_inverses(const RunSpec& spec, std::ostream& out, std::ostream& log) {
  const Stencil7d stencil;
  const Index3 b = spec.block_dims;
  std::ostringstream os;
  os << "block,inverses,seconds,max_residual\n";

  auto time_shapes = [&](const std::vector<Index3>& shapes) {
    InverseCache<double> cache(stencil);
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& s : shapes) cache.get(s);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double worst = 0.0;
    for (const auto& s : shapes) {
      const auto a = assemble_block_matrix(stencil, s);
      const DenseMatrix<double> resid =
          a * cache.get(s) - DenseMatrix<double>::Identity(a.rows(), a.cols());
      worst = std::max(worst, resid.cwiseAbs().rowwise().sum().maxCoeff());
    }
    os << to_string(b) << ',' << shapes.size() << ',' << format_double(secs) << ','
       << format_double(worst) << '\n';
    log << shapes.size() << " inverse(s) for block " << to_string(b) << ": " << secs << " s\n";
  };

  time_shapes({b});
  std::vector<Index3> all;
  for (std::int64_t z = 1; z <= b.z; ++z) {
    for (std::int64_t y = 1; y <= b.y; ++y) {
      for (std::int64_t x = 1; x <= b.x; ++x) all.push_back({x, y, z});
    }
  }
  time_shapes(all);
  emit(spec, out, os.str());
}

}  // namespace

RunSpec parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Block Jacobi and chaotic block Gauss-Seidel smoothing on structured patches",
               "patchsmooth"};
  app.require_subcommand(1);
  const std::vector<std::pair<Subcommand, const char*>> subs{
      {Subcommand::Converge, "converge"},
      {Subcommand::Smooth, "smooth"},
      {Subcommand::Bench, "bench"},
      {Subcommand::Inverses, "inverses"}};
  const std::map<Subcommand, const char*> descriptions{
      {Subcommand::Converge, "Relative error and convergence factor per block size"},
      {Subcommand::Smooth, "Smooth a patch set and report the residual history"},
      {Subcommand::Bench, "Time smoothing of a patch set against a serial baseline"},
      {Subcommand::Inverses, "Time inversion of one block shape and of all truncated shapes"}};
  std::map<Subcommand, RawOptions> raw;
  std::map<Subcommand, CLI::App*> apps;
  for (const auto& [sub, name] : subs) {
    apps[sub] = app.add_subcommand(name, descriptions.at(sub));
    add_options(*apps[sub], raw[sub]);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp") throw HelpRequested(app.help());
    throw UsageError(e.what());
  }
  for (const auto& [sub, name] : subs) {
    if (apps[sub]->parsed()) {
      if (apps[sub]->count("--help") > 0) throw HelpRequested(apps[sub]->help());
      return validate(sub, raw[sub], *apps[sub]);
    }
  }
  throw UsageError("a subcommand is required");
}

void run(const RunSpec& spec, std::ostream& out, std::ostream& log) {
  switch (spec.subcommand) {
    case Subcommand::Converge: run_converge(spec, out, log); break;
    case Subcommand::Smooth: run_smooth(spec, out, log); break;
    case Subcommand::Bench: run_bench_cmd(spec, out, log); break;
    case Subcommand::Inverses: run_inverses(spec, out, log); break;
  }
}

}  // namespace patchsmooth::cli
