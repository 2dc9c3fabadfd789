#pragma once

#include <stdexcept>

#include "gsfield/core/types.hpp"

namespace gsf {

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  double depth_scale = 1.0;  // raw depth units per meter (e.g. 5000 for TUM)
  double near_plane = 0.1;
  double far_plane = 100.0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("intrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw std::invalid_argument("intrinsics: image size must be positive");
    if (!(depth_scale > 0.0)) throw std::invalid_argument("intrinsics: depth_scale must be positive");
    if (!(near_plane > 0.0) || !(far_plane > near_plane))
      throw std::invalid_argument("intrinsics: need 0 < near < far");
  }

  Vec2 project(const Vec3& point_cam) const {
    return {fx * point_cam.x() / point_cam.z() + cx, fy * point_cam.y() / point_cam.z() + cy};
  }

  /// Pixel (x, y) at camera depth z back to a camera-frame point.
  Vec3 backproject(double x, double y, double z) const {
    return {(x - cx) / fx * z, (y - cy) / fy * z, z};
  }
};

}  // namespace gsf
