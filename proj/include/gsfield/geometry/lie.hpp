#pragma once

#include "gsfield/core/types.hpp"

namespace gsf {

/// skew(v) * u == v x u
Mat3 skew(const Vec3& v);

/// Rodrigues exponential on the rotation group. Small-angle Taylor branch
/// below 1e-8 tangent norm.
Mat3 exp_map(const Vec3& tangent);

/// Inverse of exp_map. Valid for rotations with angle < pi; robust branch
/// near pi picks the axis from the symmetric part.
Vec3 log_map(const Mat3& rotation);

}  // namespace gsf
