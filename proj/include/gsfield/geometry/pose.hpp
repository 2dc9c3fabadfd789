#pragma once

#include "gsfield/core/types.hpp"
#include "gsfield/geometry/lie.hpp"

namespace gsf {

/// World-to-camera rigid transform: point_cam = exp(rotation_tangent) * point_world + translation.
///
/// Pose increments use the camera-frame convention: an update delta = (d_rot, d_trans)
/// acts on camera points as x -> exp(skew(d_rot)) * x + d_trans, i.e. rotation about
/// the camera center. Gradients reported by the rasterizer live in the same tangent.
struct CameraPose {
  Vec3 rotation_tangent = Vec3::Zero();
  Vec3 translation = Vec3::Zero();

  static CameraPose identity() { return {}; }
  static CameraPose from_matrix(const Mat3& rotation, const Vec3& t) {
    return {log_map(rotation), t};
  }

  Mat3 rotation() const { return exp_map(rotation_tangent); }

  Vec3 transform(const Vec3& point_world) const {
    return rotation() * point_world + translation;
  }

  /// this ∘ other: apply `other` first, then this.
  CameraPose compose(const CameraPose& other) const {
    const Mat3 r1 = rotation();
    const Mat3 r2 = other.rotation();
    return {log_map(r1 * r2), r1 * other.translation + translation};
  }

  CameraPose inverse() const {
    const Mat3 rt = rotation().transpose();
    return {-rotation_tangent, -(rt * translation)};
  }

  /// Camera center expressed in world coordinates.
  Vec3 center() const { return -(rotation().transpose() * translation); }

  /// Apply a camera-frame increment (see struct comment).
  CameraPose perturbed(const Vec6& delta) const {
    const Mat3 d_rot = exp_map(delta.head<3>());
    const Mat3 r_new = d_rot * rotation();
    return {log_map(r_new), d_rot * translation + delta.tail<3>()};
  }
};

}  // namespace gsf
