#pragma once

#include <cstdint>
#include <vector>

#include "gsfield/core/image.hpp"
#include "gsfield/geometry/camera.hpp"
#include "gsfield/geometry/primitive.hpp"
#include "gsfield/raster/output.hpp"

namespace gsf {

struct LossWeights {
  // Mapping term weights, in order: color, ssim, geo, align, iso, var.
  double w_color = 0.7;
  double w_ssim = 0.1;
  double w_geo = 0.25;
  double w_align = 0.25;
  double w_iso = 0.1;
  double w_var = 0.15;
  // Tracking term weights: color, geo.
  double t_color = 0.2;
  double t_geo = 1.0;
  double iso_epsilon = 1.0;
  double opacity_floor = 0.1;      // depth losses ignore pixels rendered thinner than this
  bool normalize_by_valid = true;  // false: divide by H*W even when masking removes pixels

  static LossWeights indoor_synthetic();  // Replica-style sequences
  static LossWeights handheld_real();     // TUM / ScanNet-style sequences
  void validate() const;
};

/// Mean absolute color error over unmasked pixels, averaged over channels.
/// mask may be null (all pixels). Empty mask -> 0 with warning set.
double color_loss(const ImageRGB& rendered, const ImageRGB& target, const ImageMask* mask,
                  bool normalize_by_valid, bool* empty_warning = nullptr);

/// 1 - mean SSIM.
double ssim_loss(const ImageRGB& rendered, const ImageRGB& target);

/// Mean absolute depth error over masked-in pixels.
double geo_loss(const ImageD& rendered_depth, const ImageD& observed_depth, const ImageMask& mask,
                bool normalize_by_valid, bool* empty_warning = nullptr);

/// Mean absolute difference between the two rendered depth estimates.
double align_loss(const ImageD& alpha_depth, const ImageD& median_depth, const ImageMask& mask,
                  bool normalize_by_valid, bool* empty_warning = nullptr);

/// Mean over selected primitives of max(max(s)/min(s), eps) - eps. `visible`
/// may be null to take every primitive.
double iso_loss(const std::vector<GaussianPrimitive>& primitives,
                const std::vector<uint8_t>* visible, double eps);

/// Mean |U| over masked-in pixels (U is non-negative by construction; the
/// absolute value is kept literal).
double var_loss(const ImageD& uncertainty, const ImageMask& mask, bool normalize_by_valid,
                bool* empty_warning = nullptr);

/// Pixels whose accumulated opacity reaches the floor.
ImageMask opacity_floor_mask(const RenderOutput& out, double floor);
/// Pixels with usable sensor depth.
ImageMask sensor_valid_mask(const ImageD& observed, const CameraIntrinsics& intrinsics);
ImageMask mask_and(const ImageMask& a, const ImageMask& b);

struct MappingLossResult {
  double color = 0.0, ssim = 0.0, geo = 0.0, align = 0.0, iso = 0.0, var = 0.0;
  double total = 0.0;
  bool any_empty_mask = false;
  UpstreamGradients upstream;            // filled when gradients were requested
  std::vector<Vec3> d_log_scale_direct;  // iso-term gradients, bypassing the renderer
};

/// The weighted mapping objective over one rendered keyframe. When
/// want_gradients is set, upstream adjoint maps and the direct iso gradients
/// are produced. When fingerprint is non-null, discrete decisions (masks,
/// residual signs, iso argmin/argmax and threshold states) are folded in.
MappingLossResult evaluate_mapping_loss(const std::vector<GaussianPrimitive>& primitives,
                                        const RenderResult& rendered, const ImageRGB& target_rgb,
                                        const ImageD& observed_depth,
                                        const CameraIntrinsics& intrinsics, const LossWeights& w,
                                        bool want_gradients, uint64_t* fingerprint = nullptr);

struct TrackingLossResult {
  double color = 0.0, geo = 0.0, total = 0.0;
  int valid_color = 0, valid_geo = 0;
  UpstreamGradients upstream;
};

/// The weighted tracking objective: color over pixels with opacity above the
/// floor, depth additionally restricted to valid sensor samples.
TrackingLossResult evaluate_tracking_loss(const RenderResult& rendered, const ImageRGB& target_rgb,
                                          const ImageD& observed_depth,
                                          const CameraIntrinsics& intrinsics, const LossWeights& w,
                                          bool want_gradients, uint64_t* fingerprint = nullptr);

}  // namespace gsf
