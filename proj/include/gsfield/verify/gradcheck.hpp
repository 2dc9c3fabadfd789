#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gsfield/core/hash.hpp"
#include "gsfield/raster/rasterizer.hpp"

namespace gsf {

/// Discrete state of a forward render: contributor sets, clamp decisions and
/// median selections. Two evaluations with equal fingerprints lie on the same
/// smooth branch of the objective, so central differences across them are valid.
uint64_t fingerprint_record(const BlendRecord& record, double alpha_clamp);

/// A differentiable-objective check problem. `objective` evaluates the scalar
/// loss from a render (folding its own discrete decisions — mask bits, residual
/// signs, argmax picks — into the fingerprint). `upstream` produces the adjoint
/// seed maps at the base point, and `direct_gradient` adds any loss terms that
/// reach parameters without passing through the renderer.
struct GradCheckProblem {
  std::vector<GaussianPrimitive> primitives;
  CameraPose pose;
  CameraIntrinsics intrinsics;
  RasterConfig config;
  const ImageD* observed_depth = nullptr;

  std::function<double(const std::vector<GaussianPrimitive>&, const RenderResult&, uint64_t&)>
      objective;
  std::function<UpstreamGradients(const RenderResult&)> upstream;
  std::function<void(const std::vector<GaussianPrimitive>&, const RenderResult&, GradientBundle&)>
      direct_gradient;  // optional
};

struct GradCheckReport {
  int total = 0;
  int checked = 0;
  int skipped = 0;  // parameters whose +/-h evaluations changed discrete state
  double max_rel_err = 0.0;
  double worst_analytic = 0.0;
  double worst_fd = 0.0;
  std::string worst_param;

  double skipped_fraction() const { return total == 0 ? 0.0 : double(skipped) / total; }
};

/// Central finite differences on every stored parameter and the 6 pose tangent
/// components. rel err = |a - fd| / max(|a|, |fd|, denom_floor).
GradCheckReport run_gradcheck(const GradCheckProblem& problem, double step = 1e-4,
                              double denom_floor = 1e-3);

/// RasterConfig for gradient checking: no skip threshold, no early termination,
/// and a wide footprint so hard cutoffs sit far out in the tails.
RasterConfig smooth_raster_config();

}  // namespace gsf
