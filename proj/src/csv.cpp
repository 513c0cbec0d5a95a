#include "patchsmooth/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace patchsmooth {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<ConvergenceRow> convergence_rows(Scheme scheme, Index3 block, const std::string& patch,
                                             std::uint64_t seed, std::span<const double> history) {
  std::vector<ConvergenceRow> rows;
  rows.reserve(history.size());
  for (std::size_t k = 0; k < history.size(); ++k) {
    const double rel = history[0] > 0.0 ? history[k] / history[0] : 0.0;
    rows.push_back({std::string(to_string(scheme)), to_string(block), patch, seed, k, history[k], rel});
  }
  return rows;
}

std::vector<ConvergenceRow> convergence_rows(const StudyReport& report) {
  auto rows = convergence_rows(report.scheme, report.block_dims, to_string(report.patch_dims.cells),
                               report.seed, report.residual_history);
  for (auto& row : rows) row.relative_error = report.relative_error_at.at(row.step);
  return rows;
}

void write_convergence_csv(std::ostream& os, std::span<const ConvergenceRow> rows) {
  os << kConvergenceHeader << '\n';
  for (const auto& r : rows) {
    os << r.scheme << ',' << r.block << ',' << r.patch << ',' << r.seed << ',' << r.step << ','
       << format_double(r.residual_l2) << ',' << format_double(r.relative_error) << '\n';
  }
}

void write_convergence_csv(std::ostream& os, std::span<const StudyReport> reports) {
  std::vector<ConvergenceRow> rows;
  for (const auto& rep : reports) {
    auto r = convergence_rows(rep);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  write_convergence_csv(os, rows);
}

void write_bench_csv(std::ostream& os, std::span<const BenchRecord> records) {
  os << kBenchHeader << '\n';
  for (const auto& r : records) {
    os << r.patch_spec << ',' << to_string(r.block_dims) << ',' << to_string(r.scheme) << ','
       << to_string(r.strategy) << ',' << r.patch_workers << ',' << r.block_workers << ','
       << r.steps << ',' << format_double(r.wall_seconds) << ','
       << format_double(r.cells_per_second) << ',' << format_double(r.ghost_seconds) << ','
       << (r.speedup ? format_double(*r.speedup) : "") << ','
       << (r.efficiency ? format_double(*r.efficiency) : "") << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// strtod rather than stod: subnormal residuals are legitimate values here.
double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw std::invalid_argument("bad number: " + s);
  return v;
}

}  // namespace

std::vector<ConvergenceRow> read_convergence_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kConvergenceHeader) {
    throw std::invalid_argument("not a convergence CSV: bad header");
  }
  std::vector<ConvergenceRow> rows;
  while (std::getline(is, line)) {
    const auto f = split(line);
    if (f.size() != 7) throw std::invalid_argument("convergence CSV row needs 7 fields: " + line);
    rows.push_back({f[0], f[1], f[2], std::stoull(f[3]), static_cast<std::size_t>(std::stoull(f[4])),
                    parse_double(f[5]), parse_double(f[6])});
  }
  return rows;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << contents;
  os.flush();
  if (!os) throw std::runtime_error("write to " + path.string() + " failed");
}

}  // namespace patchsmooth
