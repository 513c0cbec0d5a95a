#pragma once

// Patch geometry: index spaces, ghost layers, spatial blocks and levels of
// abutting patches.

#include <Eigen/Core>

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace patchsmooth {

/// Integer triple used for cell coordinates, extents and patch origins.
struct Index3 {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  friend constexpr auto operator<=>(const Index3&, const Index3&) = default;

  friend constexpr Index3 operator+(Index3 a, Index3 b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend constexpr Index3 operator-(Index3 a, Index3 b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }

  constexpr std::int64_t operator[](int axis) const {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }
  constexpr std::int64_t& operator[](int axis) {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }

  constexpr std::int64_t product() const { return x * y * z; }
};

/// Formats as "AxBxC".
std::string to_string(const Index3& v);

struct PatchDims {
  Index3 cells{1, 1, 1};
  int ghost_width = 1;

  constexpr std::int64_t nx() const { return cells.x; }
  constexpr std::int64_t ny() const { return cells.y; }
  constexpr std::int64_t nz() const { return cells.z; }

  constexpr Index3 padded() const {
    const std::int64_t g2 = 2 * ghost_width;
    return {cells.x + g2, cells.y + g2, cells.z + g2};
  }
  constexpr std::int64_t interior_cells() const { return cells.product(); }
  constexpr std::int64_t total_cells() const { return padded().product(); }

  friend constexpr bool operator==(const PatchDims&, const PatchDims&) = default;
};

/// Throws std::invalid_argument unless every extent is positive and the
/// ghost width is nonnegative, std::overflow_error if the padded index space
/// does not fit a signed 64-bit offset.
void validate(const PatchDims& dims);

struct GhostOverhead {
  std::int64_t ghost_cells = 0;
  double fraction = 0.0;  // ghost_cells / interior cells
};

GhostOverhead ghost_overhead(const PatchDims& dims);

/// Lexicographic x-fastest offset of interior cell `cell`. With `with_ghost`
/// the coordinates are shifted by the ghost width and padded strides are
/// used, i.e. the offset into a field that stores the ghost layer.
std::int64_t global_index(const PatchDims& dims, Index3 cell, bool with_ghost);

/// Cell addressed by a thread of a block-structured launch:
/// block_index * block_dim + thread_index per axis.
constexpr Index3 cell_from_thread(Index3 block_index, Index3 block_dim,
                                  Index3 thread_index) {
  return {block_index.x * block_dim.x + thread_index.x,
          block_index.y * block_dim.y + thread_index.y,
          block_index.z * block_dim.z + thread_index.z};
}

/// Axis-aligned box of interior cells, `lo` inclusive.
struct BlockRange {
  Index3 lo;
  Index3 extent;

  std::int64_t size() const { return extent.product(); }
  friend constexpr bool operator==(const BlockRange&, const BlockRange&) = default;
};

struct BlockDecomposition {
  Index3 block_dims;
  std::vector<BlockRange> ranges;  // lexicographic, x-fastest

  std::set<Index3> shapes() const;
};

/// Non-overlapping tiling of the interior by boxes of `block_dims`; the last
/// box along an axis is truncated when the patch extent is not a multiple
/// of the block extent.
BlockDecomposition decompose_blocks(const PatchDims& dims, Index3 block_dims);

template <typename Scalar>
class Patch {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Patch() = default;

  /// Only a ghost width of one is supported.
  explicit Patch(PatchDims dims, Index3 origin = {}) : dims_(dims), origin_(origin) {
    validate(dims_);
    if (dims_.ghost_width != 1) {
      throw std::invalid_argument("patch ghost width must be 1, got " +
                                  std::to_string(dims_.ghost_width));
    }
    const auto padded = dims_.padded();
    stride_y_ = padded.x;
    stride_z_ = padded.x * padded.y;
    u_ = Vector::Zero(static_cast<Eigen::Index>(dims_.total_cells()));
    v_ = Vector::Zero(static_cast<Eigen::Index>(dims_.total_cells()));
    f_ = Vector::Zero(static_cast<Eigen::Index>(dims_.interior_cells()));
  }

  const PatchDims& dims() const { return dims_; }
  const Index3& origin() const { return origin_; }

  /// Solution including the ghost layer.
  Vector& u() { return u_; }
  const Vector& u() const { return u_; }
  /// Right-hand side, interior cells only, already scaled by h^2.
  Vector& f() { return f_; }
  const Vector& f() const { return f_; }
  /// Staging buffer for Jacobi sweeps; same padded layout as u so the two
  /// can trade places.
  Vector& v() { return v_; }
  const Vector& v() const { return v_; }

  std::int64_t stride_y() const { return stride_y_; }
  std::int64_t stride_z() const { return stride_z_; }

  /// Offset into u/v of cell (i,j,k); coordinates may reach into the ghost
  /// layer, i.e. -1 <= i <= nx.
  std::int64_t offset(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return (i + 1) + (j + 1) * stride_y_ + (k + 1) * stride_z_;
  }
  std::int64_t rhs_offset(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return i + dims_.nx() * (j + dims_.ny() * k);
  }

  Scalar& at(std::int64_t i, std::int64_t j, std::int64_t k) { return u_[offset(i, j, k)]; }
  Scalar at(std::int64_t i, std::int64_t j, std::int64_t k) const { return u_[offset(i, j, k)]; }
  Scalar& rhs(std::int64_t i, std::int64_t j, std::int64_t k) { return f_[rhs_offset(i, j, k)]; }
  Scalar rhs(std::int64_t i, std::int64_t j, std::int64_t k) const { return f_[rhs_offset(i, j, k)]; }

  bool contains_interior(Index3 c) const {
    return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < dims_.nx() && c.y < dims_.ny() &&
           c.z < dims_.nz();
  }

  /// Exchanges the roles of u and v without touching their contents.
  void swap_solution_buffers() noexcept { u_.swap(v_); }

 private:
  PatchDims dims_;
  Index3 origin_;
  std::int64_t stride_y_ = 0;
  std::int64_t stride_z_ = 0;
  Vector u_;
  Vector v_;
  Vector f_;
};

using PatchXd = Patch<double>;

template <typename Scalar = double>
Patch<Scalar> create_patch(const PatchDims& dims, Index3 origin = {}) {
  return Patch<Scalar>(dims, origin);
}

/// How the homogeneous Dirichlet condition is imposed through the ghost
/// layer on physical boundaries.
enum class DirichletClosure {
  /// ghost = 0: the boundary value sits at the ghost cell center. Boundary
  /// rows of the operator keep the plain stencil, so the diagonal blocks the
  /// smoother inverts are exactly those of the patch operator.
  GhostCenter,
  /// ghost = -(adjacent interior): linear extrapolation putting the zero on
  /// the cell face. Adds -face to the operator diagonal per physical face,
  /// which the shape-keyed block inverses do not see.
  CellFace,
};

/// Fills every ghost cell on every face per `closure`, axis by axis in the
/// order x, y, z. Each pass also covers the ghost rows written by the
/// previous passes, so edge and corner ghosts are defined and the operation
/// is idempotent.
template <typename Scalar>
void fill_physical_ghosts(Patch<Scalar>& patch,
                          DirichletClosure closure = DirichletClosure::GhostCenter) {
  const auto nx = patch.dims().nx();
  const auto ny = patch.dims().ny();
  const auto nz = patch.dims().nz();
  const Scalar sign = closure == DirichletClosure::CellFace ? Scalar(-1) : Scalar(0);
  for (std::int64_t k = 0; k < nz; ++k) {
    for (std::int64_t j = 0; j < ny; ++j) {
      patch.at(-1, j, k) = sign * patch.at(0, j, k);
      patch.at(nx, j, k) = sign * patch.at(nx - 1, j, k);
    }
  }
  for (std::int64_t k = 0; k < nz; ++k) {
    for (std::int64_t i = -1; i <= nx; ++i) {
      patch.at(i, -1, k) = sign * patch.at(i, 0, k);
      patch.at(i, ny, k) = sign * patch.at(i, ny - 1, k);
    }
  }
  for (std::int64_t j = -1; j <= ny; ++j) {
    for (std::int64_t i = -1; i <= nx; ++i) {
      patch.at(i, j, -1) = sign * patch.at(i, j, 0);
      patch.at(i, j, nz) = sign * patch.at(i, j, nz - 1);
    }
  }
}

enum class Face : int { XLo = 0, XHi, YLo, YHi, ZLo, ZHi };

constexpr int face_axis(Face f) { return static_cast<int>(f) / 2; }
constexpr bool face_is_high(Face f) { return static_cast<int>(f) % 2 == 1; }
constexpr Face opposite(Face f) {
  return static_cast<Face>(static_cast<int>(f) ^ 1);
}

/// One side of a face abutment. The ghost cells of `patch` that lie in the
/// global box [lo, hi) coincide with interior cells of `neighbor`; the box is
/// one cell thick along the face normal.
struct Interface {
  std::size_t patch = 0;
  std::size_t neighbor = 0;
  Face face = Face::XLo;
  Index3 lo;
  Index3 hi;

  friend constexpr bool operator==(const Interface&, const Interface&) = default;
};

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct PatchBox {
  Index3 origin;
  Index3 cells;
};

std::vector<Interface> find_interfaces(const std::vector<PatchBox>& boxes);
void check_interfaces(const std::vector<PatchBox>& boxes,
                      const std::vector<Interface>& interfaces);

}  // namespace detail

/// A collection of patches on one refinement level. Patch interiors must be
/// disjoint in the global index space; face abutments are discovered from the
/// origins and extents.
template <typename Scalar>
class Level {
 public:
  Level() = default;

  explicit Level(std::vector<Patch<Scalar>> patches,
                 DirichletClosure closure = DirichletClosure::GhostCenter)
      : patches_(std::move(patches)), closure_(closure) {
    interfaces_ = detail::find_interfaces(boxes());
  }

  /// Uses caller-supplied abutment records; they are checked against the
  /// patch geometry and StructuralError is thrown on any mismatch.
  Level(std::vector<Patch<Scalar>> patches, std::vector<Interface> interfaces,
        DirichletClosure closure = DirichletClosure::GhostCenter)
      : patches_(std::move(patches)), interfaces_(std::move(interfaces)), closure_(closure) {
    detail::check_interfaces(boxes(), interfaces_);
  }

  std::size_t size() const { return patches_.size(); }
  Patch<Scalar>& operator[](std::size_t i) { return patches_[i]; }
  const Patch<Scalar>& operator[](std::size_t i) const { return patches_[i]; }
  std::vector<Patch<Scalar>>& patches() { return patches_; }
  const std::vector<Patch<Scalar>>& patches() const { return patches_; }
  const std::vector<Interface>& interfaces() const { return interfaces_; }
  DirichletClosure closure() const { return closure_; }

  std::int64_t interior_cells() const {
    std::int64_t n = 0;
    for (const auto& p : patches_) n += p.dims().interior_cells();
    return n;
  }

 private:
  std::vector<detail::PatchBox> boxes() const {
    std::vector<detail::PatchBox> out;
    out.reserve(patches_.size());
    for (const auto& p : patches_) out.push_back({p.origin(), p.dims().cells});
    return out;
  }

  std::vector<Patch<Scalar>> patches_;
  std::vector<Interface> interfaces_;
  DirichletClosure closure_ = DirichletClosure::GhostCenter;
};

using LevelXd = Level<double>;

/// Copies neighbor interior values into interface ghost cells. Reads touch
/// interior cells only and writes touch ghost cells only, so every ghost
/// receives the value its neighbor held when the exchange began, whatever the
/// processing order.
template <typename Scalar>
void exchange_interface_ghosts(Level<Scalar>& level) {
  for (const auto& rec : level.interfaces()) {
    auto& dst = level[rec.patch];
    const auto& src = level[rec.neighbor];
    for (std::int64_t z = rec.lo.z; z < rec.hi.z; ++z) {
      for (std::int64_t y = rec.lo.y; y < rec.hi.y; ++y) {
        for (std::int64_t x = rec.lo.x; x < rec.hi.x; ++x) {
          const Index3 g{x, y, z};
          const Index3 d = g - dst.origin();
          const Index3 s = g - src.origin();
          dst.at(d.x, d.y, d.z) = src.at(s.x, s.y, s.z);
        }
      }
    }
  }
}

/// Physical extrapolation on every patch followed by the interface exchange.
template <typename Scalar>
void refresh_ghosts(Level<Scalar>& level) {
  for (auto& p : level.patches()) fill_physical_ghosts(p, level.closure());
  exchange_interface_ghosts(level);
}

}  // namespace patchsmooth
