#include "gsfield/geometry/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gsf {

Mat3 build_covariance(const Vec3& log_scale, const Vec4& quat) {
  if (!log_scale.allFinite() || !quat.allFinite())
    throw std::invalid_argument("build_covariance: non-finite parameters");
  if (quat.norm() < 1e-12)
    throw std::invalid_argument("build_covariance: degenerate quaternion");

  const Vec4 q = quat.normalized();
  const double w = q(0), x = q(1), y = q(2), z = q(3);
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  const Vec3 s2 = (2.0 * log_scale).array().exp();
  return r * s2.asDiagonal() * r.transpose();
}

Mat23 projection_jacobian(const Vec3& p, const CameraIntrinsics& k) {
  const double iz = 1.0 / p.z();
  const double iz2 = iz * iz;
  Mat23 j;
  j << k.fx * iz, 0.0, -k.fx * p.x() * iz2,
       0.0, k.fy * iz, -k.fy * p.y() * iz2;
  return j;
}

namespace {

// Conservative screen-space interval for one axis: the extremes of
// c + f * a' / z' over the box [a - r, a + r] x [z - r, z + r] sit at its
// corners because the map is monotone in each variable while z' > 0.
void axis_bounds(double a, double z, double r, double f, double c,
                 double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (double da : {-r, r})
    for (double dz : {-r, r}) {
      const double u = c + f * (a + da) / (z + dz);
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
}

}  // namespace

ProjectedGaussian project_gaussian(const Vec3& mean_world, const Mat3& cov_world,
                                   const CameraPose& pose, const CameraIntrinsics& k,
                                   double dilation, double footprint_sigma,
                                   double support_radius) {
  ProjectedGaussian out;
  const Mat3 w = pose.rotation();
  const Vec3 p_cam = w * mean_world + pose.translation;
  out.depth = p_cam.z();
  if (!(p_cam.z() > k.near_plane) || !(p_cam.z() < k.far_plane)) return out;

  if (support_radius > 0.0) {
    // The local affine model of the projection is only trustworthy when the
    // whole support ball stays in front of the camera.
    if (!(p_cam.z() - support_radius > 0.0)) return out;
    // The blend adds an isotropic screen blur of sqrt(dilation) pixels, so pad
    // the projected support box by its reach before testing the image.
    const double pad = footprint_sigma * std::sqrt(std::max(0.0, dilation));
    double u_lo, u_hi, v_lo, v_hi;
    axis_bounds(p_cam.x(), p_cam.z(), support_radius, k.fx, k.cx, u_lo, u_hi);
    axis_bounds(p_cam.y(), p_cam.z(), support_radius, k.fy, k.cy, v_lo, v_hi);
    if (u_hi + pad < 0.0 || u_lo - pad > k.width ||
        v_hi + pad < 0.0 || v_lo - pad > k.height)
      return out;
  }

  out.mean2d = k.project(p_cam);

  const Mat23 j = projection_jacobian(p_cam, k);
  Mat2 cov2d = j * w * cov_world * w.transpose() * j.transpose();
  cov2d(0, 0) += dilation;
  cov2d(1, 1) += dilation;
  out.cov2d = cov2d;

  const double det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(1, 0);
  if (!(det > 0.0) || !cov2d.allFinite()) return out;
  const double inv_det = 1.0 / det;
  out.conic << cov2d(1, 1) * inv_det, -cov2d(0, 1) * inv_det,
               -cov2d(1, 0) * inv_det, cov2d(0, 0) * inv_det;

  const double mid = 0.5 * (cov2d(0, 0) + cov2d(1, 1));
  const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
  out.radius = footprint_sigma * std::sqrt(lambda_max);

  // Cull when the footprint disc cannot touch any pixel center.
  if (out.mean2d.x() + out.radius < 0.0 || out.mean2d.x() - out.radius > k.width ||
      out.mean2d.y() + out.radius < 0.0 || out.mean2d.y() - out.radius > k.height)
    return out;

  out.visible = true;
  return out;
}

}  // namespace gsf
