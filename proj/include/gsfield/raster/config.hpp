#pragma once

namespace gsf {

struct RasterConfig {
  double alpha_clamp = 0.99;          // per-primitive alpha ceiling inside the blend
  double alpha_skip = 1.0 / 255.0;    // contributions below this are dropped
  double termination_threshold = 1e-8;  // stop blending once transmittance falls below this
  double footprint_sigma = 3.0;       // Mahalanobis cutoff, in standard deviations
  double dilation = 0.3;              // screen-space covariance dilation, px^2
  int tile_size = 16;
  // When false, the uncertainty map is treated as a stop-gradient statistic:
  // upstream gradients on it are ignored by the backward pass.
  bool uncertainty_full_gradient = true;
  int threads = 0;  // 0 = hardware concurrency
};

int resolve_threads(int requested);

}  // namespace gsf
