#pragma once

#include "gsfield/core/types.hpp"
#include "gsfield/geometry/camera.hpp"
#include "gsfield/geometry/pose.hpp"

namespace gsf {

/// World covariance R(quat) diag(exp(2*log_scale)) R(quat)^T.
/// Throws std::invalid_argument if any input entry is non-finite.
Mat3 build_covariance(const Vec3& log_scale, const Vec4& quat);

/// Jacobian of the pinhole projection at a camera-frame point.
Mat23 projection_jacobian(const Vec3& point_cam, const CameraIntrinsics& intrinsics);

struct ProjectedGaussian {
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Zero();  // screen-space covariance after dilation
  Mat2 conic = Mat2::Zero();  // inverse of cov2d
  double depth = 0.0;         // camera-frame z of the mean
  double radius = 0.0;        // footprint_sigma * sqrt(largest eigenvalue of cov2d)
  bool visible = false;
};

/// Project a world-space Gaussian into the screen. Invisible results come from
/// depth outside [near, far] or a footprint disc that misses the image entirely.
///
/// support_radius, when positive, is the world-space radius of the Gaussian's
/// effective support (footprint_sigma times its largest axis scale). It guards
/// against the failure mode of the affine projection: a primitive far off the
/// optical axis but barely in front of the camera gets a nearly singular
/// screen covariance whose inverse sprays spurious alpha across the image.
/// Primitives whose support reaches the camera plane are culled, and the
/// screen bounds of the support ball (which contain the true footprint) must
/// intersect the image.
ProjectedGaussian project_gaussian(const Vec3& mean_world, const Mat3& cov_world,
                                   const CameraPose& pose, const CameraIntrinsics& intrinsics,
                                   double dilation, double footprint_sigma,
                                   double support_radius = 0.0);

}  // namespace gsf
