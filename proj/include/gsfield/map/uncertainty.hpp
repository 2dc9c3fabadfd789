#pragma once

#include <vector>

#include "gsfield/core/image.hpp"
#include "gsfield/geometry/camera.hpp"
#include "gsfield/geometry/pose.hpp"
#include "gsfield/geometry/primitive.hpp"
#include "gsfield/raster/output.hpp"

namespace gsf {

struct UncertaintyConfig {
  double tau = 0.025;             // reliability threshold on nu
  double reduced_opacity = 0.005; // revivable floor assigned to flagged primitives
  void validate() const;
};

/// One keyframe's inputs to the uncertainty pass: which primitive owned each
/// pixel, what the sensor saw there, and where the camera stood.
struct UncertaintyView {
  const BlendRecord* record = nullptr;
  const ImageD* observed_depth = nullptr;
  CameraPose pose;
  CameraIntrinsics intrinsics;
};

/// Per-primitive uncertainty over the keyframe window: nu_i is the mean of
/// alpha*T*(D - d_i)^2 over every valid-depth pixel that primitive i dominates,
/// counted across all views. Primitives dominating no such pixel keep their nu
/// and are marked unobserved. Returns the number of observed primitives.
/// An empty window leaves everything untouched.
int accumulate_uncertainty(std::vector<GaussianPrimitive>& primitives,
                           const std::vector<UncertaintyView>& window, int threads = 0);

/// Sets the opacity of every primitive with nu above tau to the reduced floor
/// (still optimizable afterwards, so it can be revived). Returns the number of
/// primitives whose opacity actually changed.
int prune_unreliable(std::vector<GaussianPrimitive>& primitives, const UncertaintyConfig& cfg);

}  // namespace gsf
