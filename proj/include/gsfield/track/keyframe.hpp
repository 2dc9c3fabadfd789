#pragma once

#include "gsfield/core/image.hpp"
#include "gsfield/core/types.hpp"
#include "gsfield/geometry/pose.hpp"

namespace gsf {

/// A frame promoted to the keyframe pool: its observation, the current pose
/// estimate (refined later by bundle adjustment) and a unit descriptor used
/// for covisibility ranking.
struct KeyframeRecord {
  int frame_id = -1;
  double timestamp = 0.0;
  ImageRGB rgb;
  ImageD depth;
  CameraPose pose;
  VecX descriptor;
};

}  // namespace gsf
