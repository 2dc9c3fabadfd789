#pragma once

#include <cmath>
#include <vector>

#include "gsfield/core/types.hpp"

namespace gsf {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// One anisotropic Gaussian. Scales are stored as logs and opacity as a logit
/// so unconstrained gradient steps keep both in their valid ranges.
/// Quaternion layout is (w, x, y, z); it is normalized on decode.
struct GaussianPrimitive {
  Vec3 mean = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 quat = Vec4(1.0, 0.0, 0.0, 0.0);
  double opacity_logit = 0.0;
  std::vector<Vec3> sh;  // RGB spherical-harmonic coefficients; sh[0] is the DC band

  // Running statistics maintained by the mapper.
  double uncertainty = 0.0;     // weighted depth-error variance over dominated pixels
  bool observed = false;        // has this primitive ever been rendered into a keyframe?

  // Component-wise std::exp: Eigen's vectorized exp can differ from the scalar
  // path by an ulp across lanes, which would make an isotropic primitive report
  // unequal axes and trip the anisotropy penalty's ratio threshold.
  Vec3 scale() const {
    return Vec3(std::exp(log_scale.x()), std::exp(log_scale.y()), std::exp(log_scale.z()));
  }
  double opacity() const { return sigmoid(opacity_logit); }

  Mat3 rotation() const {
    Vec4 q = quat.normalized();
    const double w = q(0), x = q(1), y = q(2), z = q(3);
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
  }

  /// World covariance R S S^T R^T with S = diag(scale).
  Mat3 covariance() const {
    const Mat3 r = rotation();
    const Vec3 s2 = (2.0 * log_scale).array().exp();
    return r * s2.asDiagonal() * r.transpose();
  }

  /// View-independent color from the DC band alone.
  Vec3 base_color() const {
    constexpr double kC0 = 0.28209479177387814;
    Vec3 c = Vec3::Constant(0.5);
    if (!sh.empty()) c += kC0 * sh[0];
    return c.cwiseMax(0.0);
  }
};

/// Number of SH coefficients per color channel for a given degree.
inline int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

}  // namespace gsf
