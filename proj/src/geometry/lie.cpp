#include "gsfield/geometry/lie.hpp"

#include <cmath>

namespace gsf {

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return s;
}

Mat3 exp_map(const Vec3& tangent) {
  const double theta2 = tangent.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a, b;  // R = I + a*K + b*K^2
  if (theta < 1e-8) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 k = skew(tangent);
  return Mat3::Identity() + a * k + b * (k * k);
}

Vec3 log_map(const Mat3& rotation) {
  const double trace = rotation.trace();
  const double cos_theta = std::clamp((trace - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Vec3 vee(rotation(2, 1) - rotation(1, 2),  //
                 rotation(0, 2) - rotation(2, 0),  //
                 rotation(1, 0) - rotation(0, 1));
  if (theta < 1e-8) {
    return 0.5 * (1.0 + theta * theta / 6.0) * vee;
  }
  if (theta > M_PI - 1e-3) {
    // sin(theta) is tiny; recover the axis from R + R^T instead of the
    // vanishing antisymmetric part.
    const Mat3 sym = 0.5 * (rotation + rotation.transpose());
    const Mat3 outer = (sym - cos_theta * Mat3::Identity()) / (1.0 - cos_theta);
    int axis_idx = 0;
    outer.diagonal().maxCoeff(&axis_idx);
    Vec3 axis = outer.col(axis_idx) / std::sqrt(outer(axis_idx, axis_idx));
    if (axis.dot(vee) < 0.0) axis = -axis;
    return theta * axis;
  }
  return (theta / (2.0 * std::sin(theta))) * vee;
}

}  // namespace gsf
