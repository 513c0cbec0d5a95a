#include "patchsmooth/smoother.hpp"

namespace patchsmooth {

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::BlockJacobi ? "jacobi" : "chaotic-gs";
}

void SmootherConfig::validate() const {
  if (!(omega > 0.0 && omega <= 1.0)) {
    throw std::invalid_argument("omega must lie in (0, 1], got " + std::to_string(omega));
  }
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  if (block_dims.x < 1 || block_dims.y < 1 || block_dims.z < 1) {
    throw std::invalid_argument("block extents must be positive, got " + to_string(block_dims));
  }
  strategy.validate();
}

}  // namespace patchsmooth
