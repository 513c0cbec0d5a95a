#include "patchsmooth/grid.hpp"

#include <algorithm>
#include <limits>

namespace patchsmooth {

std::string to_string(const Index3& v) {
  return std::to_string(v.x) + "x" + std::to_string(v.y) + "x" + std::to_string(v.z);
}

void validate(const PatchDims& dims) {
  if (dims.nx() < 1 || dims.ny() < 1 || dims.nz() < 1) {
    throw std::invalid_argument("patch extents must be positive, got " + to_string(dims.cells));
  }
  if (dims.ghost_width < 0) {
    throw std::invalid_argument("ghost width must be nonnegative");
  }
  std::int64_t total = 1;
  for (int a = 0; a < 3; ++a) {
    std::int64_t padded = 0;
    if (__builtin_add_overflow(dims.cells[a], std::int64_t{2} * dims.ghost_width, &padded) ||
        __builtin_mul_overflow(total, padded, &total)) {
      throw std::overflow_error("patch index space overflows: " + to_string(dims.cells));
    }
  }
}

GhostOverhead ghost_overhead(const PatchDims& dims) {
  validate(dims);
  const auto interior = dims.interior_cells();
  const auto ghosts = dims.total_cells() - interior;
  return {ghosts, static_cast<double>(ghosts) / static_cast<double>(interior)};
}

std::int64_t global_index(const PatchDims& dims, Index3 cell, bool with_ghost) {
  if (cell.x < 0 || cell.y < 0 || cell.z < 0 || cell.x >= dims.nx() || cell.y >= dims.ny() ||
      cell.z >= dims.nz()) {
    throw std::out_of_range("cell " + to_string(cell) + " outside patch " +
                            to_string(dims.cells));
  }
  if (!with_ghost) return cell.x + dims.nx() * (cell.y + dims.ny() * cell.z);
  const auto g = dims.ghost_width;
  const auto p = dims.padded();
  return (cell.x + g) + p.x * ((cell.y + g) + p.y * (cell.z + g));
}

std::set<Index3> BlockDecomposition::shapes() const {
  std::set<Index3> out;
  for (const auto& r : ranges) out.insert(r.extent);
  return out;
}

BlockDecomposition decompose_blocks(const PatchDims& dims, Index3 block_dims) {
  validate(dims);
  if (block_dims.x < 1 || block_dims.y < 1 || block_dims.z < 1) {
    throw std::invalid_argument("block extents must be positive, got " + to_string(block_dims));
  }
  BlockDecomposition out{block_dims, {}};
  std::array<std::vector<std::pair<std::int64_t, std::int64_t>>, 3> axis;
  for (int a = 0; a < 3; ++a) {
    for (std::int64_t lo = 0; lo < dims.cells[a]; lo += block_dims[a]) {
      axis[a].emplace_back(lo, std::min(block_dims[a], dims.cells[a] - lo));
    }
  }
  out.ranges.reserve(axis[0].size() * axis[1].size() * axis[2].size());
  for (const auto& [zl, ze] : axis[2]) {
    for (const auto& [yl, ye] : axis[1]) {
      for (const auto& [xl, xe] : axis[0]) {
        out.ranges.push_back({{xl, yl, zl}, {xe, ye, ze}});
      }
    }
  }
  return out;
}

namespace detail {

namespace {

bool interiors_intersect(const PatchBox& a, const PatchBox& b) {
  for (int ax = 0; ax < 3; ++ax) {
    if (a.origin[ax] + a.cells[ax] <= b.origin[ax] || b.origin[ax] + b.cells[ax] <= a.origin[ax]) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::vector<Interface> find_interfaces(const std::vector<PatchBox>& boxes) {
  std::vector<Interface> out;
  for (std::size_t a = 0; a < boxes.size(); ++a) {
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      if (a == b) continue;
      const auto& pa = boxes[a];
      const auto& pb = boxes[b];
      if (a < b && interiors_intersect(pa, pb)) {
        throw StructuralError("patches " + std::to_string(a) + " and " + std::to_string(b) +
                              " overlap");
      }
      for (int ax = 0; ax < 3; ++ax) {
        // b sits directly above a along ax; the mirrored record comes from the
        // (b, a) iteration.
        bool high = pa.origin[ax] + pa.cells[ax] == pb.origin[ax];
        bool low = pb.origin[ax] + pb.cells[ax] == pa.origin[ax];
        if (!high && !low) continue;
        Index3 lo;
        Index3 hi;
        bool empty = false;
        for (int t = 0; t < 3; ++t) {
          if (t == ax) continue;
          lo[t] = std::max(pa.origin[t], pb.origin[t]);
          hi[t] = std::min(pa.origin[t] + pa.cells[t], pb.origin[t] + pb.cells[t]);
          if (lo[t] >= hi[t]) empty = true;
        }
        if (empty) continue;
        lo[ax] = high ? pb.origin[ax] : pa.origin[ax] - 1;
        hi[ax] = lo[ax] + 1;
        const Face face = static_cast<Face>(2 * ax + (high ? 1 : 0));
        out.push_back({a, b, face, lo, hi});
      }
    }
  }
  return out;
}

void check_interfaces(const std::vector<PatchBox>& boxes,
                      const std::vector<Interface>& interfaces) {
  auto fail = [](const Interface& r, const std::string& why) {
    throw StructuralError("interface " + std::to_string(r.patch) + "->" +
                          std::to_string(r.neighbor) + ": " + why);
  };
  for (const auto& r : interfaces) {
    if (r.patch >= boxes.size() || r.neighbor >= boxes.size() || r.patch == r.neighbor) {
      fail(r, "bad patch index");
    }
    const auto& pa = boxes[r.patch];
    const auto& pb = boxes[r.neighbor];
    const int ax = face_axis(r.face);
    const std::int64_t layer =
        face_is_high(r.face) ? pa.origin[ax] + pa.cells[ax] : pa.origin[ax] - 1;
    if (r.lo[ax] != layer || r.hi[ax] != layer + 1) fail(r, "box is not the ghost layer");
    for (int t = 0; t < 3; ++t) {
      if (r.lo[t] >= r.hi[t]) fail(r, "empty box");
      if (r.lo[t] < pb.origin[t] || r.hi[t] > pb.origin[t] + pb.cells[t]) {
        fail(r, "box leaves the neighbor interior");
      }
      if (t != ax && (r.lo[t] < pa.origin[t] || r.hi[t] > pa.origin[t] + pa.cells[t])) {
        fail(r, "box leaves the patch face");
      }
    }
  }
  // Symmetry: every record has its mirror.
  for (const auto& r : interfaces) {
    const int ax = face_axis(r.face);
    Index3 mlo = r.lo;
    Index3 mhi = r.hi;
    const std::int64_t mlayer = face_is_high(r.face) ? r.lo[ax] - 1 : r.lo[ax] + 1;
    mlo[ax] = mlayer;
    mhi[ax] = mlayer + 1;
    const Interface mirror{r.neighbor, r.patch, opposite(r.face), mlo, mhi};
    if (std::find(interfaces.begin(), interfaces.end(), mirror) == interfaces.end()) {
      fail(r, "missing mirror record");
    }
  }
}

}  // namespace detail

}  // namespace patchsmooth
