#pragma once

#include <cstdint>
#include <vector>

#include "gsfield/core/image.hpp"
#include "gsfield/core/types.hpp"

namespace gsf {

struct GaussianPrimitive;

/// Everything one forward render emits. Depth maps are in meters. Pixels with
/// per_pixel_count == 0 have zero opacity and carry no valid depth.
struct RenderOutput {
  int width = 0, height = 0;
  ImageRGB color;
  ImageD alpha_depth;
  ImageD median_depth;
  ImageMask median_valid;          // 1 where transmittance actually crossed 0.5
  ImageD opacity;                  // accumulated alpha * T
  ImageD uncertainty;              // weighted squared depth deviation from the sensor
  bool has_uncertainty = false;    // false when no sensor depth was supplied
  ImageD final_transmittance;
  Image<int32_t> per_pixel_count;

  void init(int w, int h);
};

/// Per-pixel blend history kept from the forward pass: contributor ids with
/// their alpha and pre-blend transmittance, stored front-to-back in CSR form.
struct BlendRecord {
  int width = 0, height = 0;
  int num_primitives = 0;  // primitive-list size at forward time
  std::vector<uint32_t> row_start;  // width*height + 1 offsets into the arrays below
  std::vector<int32_t> prim;
  std::vector<double> alpha;
  std::vector<double> transmittance;
  Image<int32_t> dominant;     // per-pixel max alpha*T contributor, -1 if none
  Image<int32_t> median_prim;  // contributor whose blend drops T below 0.5, -1 if none
  std::vector<uint8_t> visible;  // per-primitive: survived projection culling

  uint32_t begin(int x, int y) const { return row_start[static_cast<size_t>(y) * width + x]; }
  uint32_t end(int x, int y) const { return row_start[static_cast<size_t>(y) * width + x + 1]; }
};

struct RenderResult {
  RenderOutput out;
  BlendRecord record;
};

/// Adjoint seeds for the backward pass. An empty image means that map carries
/// no upstream gradient.
struct UpstreamGradients {
  ImageRGB d_color;
  ImageD d_alpha_depth;
  ImageD d_median_depth;
  ImageD d_opacity;
  ImageD d_uncertainty;
};

/// Gradients with respect to every stored parameter plus the camera pose.
/// Pose gradients live in the camera-frame tangent used by CameraPose::perturbed.
struct GradientBundle {
  std::vector<Vec3> d_mean;
  std::vector<Vec3> d_log_scale;
  std::vector<Vec4> d_quat;
  std::vector<double> d_opacity_logit;
  std::vector<std::vector<Vec3>> d_sh;
  Vec6 d_pose = Vec6::Zero();
  std::vector<Vec2> d_mean2d;  // screen-space mean gradient, kept for densification stats

  void init(const std::vector<GaussianPrimitive>& primitives);
  void add(const GradientBundle& other);
  void scale(double s);
  bool all_finite() const;
};

}  // namespace gsf
