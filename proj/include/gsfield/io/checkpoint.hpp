#pragma once

#include <string>
#include <vector>

#include "gsfield/geometry/camera.hpp"
#include "gsfield/geometry/primitive.hpp"

namespace gsf {

/// Everything needed to re-render a saved map offline.
struct Checkpoint {
  CameraIntrinsics intrinsics;
  std::vector<GaussianPrimitive> primitives;
};

/// Versioned little-endian binary dump. Loading rejects wrong magic bytes and
/// unknown versions with std::runtime_error.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gsf
