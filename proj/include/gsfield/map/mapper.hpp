#pragma once

#include <random>
#include <vector>

#include "gsfield/loss/losses.hpp"
#include "gsfield/map/adam.hpp"
#include "gsfield/map/uncertainty.hpp"
#include "gsfield/raster/rasterizer.hpp"

namespace gsf {

struct DensifyConfig {
  double grad_threshold = 2e-4;  // mean screen-space positional gradient, NDC units
  int interval = 100;            // mapping iterations between passes; 0 disables
  double split_factor = 1.6;     // children shrink by this much
  double size_fraction = 0.01;   // split/clone boundary as a fraction of scene extent
  double cull_opacity = 0.005;
};

struct MapperConfig {
  int sh_coeffs = 1;
  int init_stride = 2;
  int spawn_stride = 2;
  double spawn_opacity_threshold = 0.5;  // spawn where accumulated opacity falls below this
  double init_opacity = 0.5;
  double scene_extent = 4.0;             // scales the mean learning rate and split boundary
  double lr_mean = 1.6e-4;
  double lr_sh = 2.5e-3;
  double lr_opacity = 5e-2;
  double lr_scale = 5e-3;
  double lr_rotation = 1e-3;
  int iterations = 60;       // per mapping window
  int init_iterations = 120; // first-frame bootstrap runs longer
  DensifyConfig densify;
  UncertaintyConfig uncertainty;
  RasterConfig raster;
  LossWeights weights;
  uint64_t seed = 0;  // split sampling
  void validate() const;
};

/// One keyframe as the mapper consumes it.
struct MapObservation {
  const ImageRGB* rgb = nullptr;
  const ImageD* depth = nullptr;
  CameraPose pose;
};

/// Co-indexed moment buffers for every primitive parameter array.
struct PrimitiveOptimizer {
  PrimitiveOptimizer(const MapperConfig& cfg);

  void append(size_t count);
  void filter(const std::vector<uint8_t>& keep);
  void step(std::vector<GaussianPrimitive>& primitives, const GradientBundle& grads);
  size_t entries() const { return mean.entries(); }

  AdamState mean, log_scale, quat, opacity, sh;

 private:
  int sh_dim_;
  std::vector<double> scratch_x_, scratch_g_;
};

struct StructuralChange {
  int cloned = 0;
  int split = 0;
  int removed = 0;
};

struct MapState {
  std::vector<GaussianPrimitive> primitives;
  PrimitiveOptimizer optimizer;
  int iteration = 0;               // total mapping iterations so far
  std::vector<double> grad_accum;  // summed NDC gradient norms since the last densify pass
  std::vector<int> grad_count;     // iterations each primitive appeared on screen
  std::mt19937_64 rng;

  explicit MapState(const MapperConfig& cfg) : optimizer(cfg), rng(cfg.seed) {}
  void check_consistent() const;  // throws logic_error when arrays disagree
};

/// Backprojects one primitive per stride-sampled valid-depth pixel of the
/// first frame. Fails if the frame carries no usable depth.
MapState initialize_map(const ImageRGB& rgb, const ImageD& depth, const CameraPose& pose,
                        const CameraIntrinsics& intrinsics, const MapperConfig& cfg);

/// Adds primitives at stride-sampled pixels the current map leaves thin
/// (accumulated opacity below the threshold) where sensor depth exists.
int spawn_gaussians(MapState& state, const RenderOutput& rendered, const ImageRGB& rgb,
                    const ImageD& depth, const CameraPose& pose,
                    const CameraIntrinsics& intrinsics, const MapperConfig& cfg);

/// Splits large / clones small high-gradient primitives and removes ones that
/// faded out, then resets the gradient statistics.
StructuralChange densify_and_cull(MapState& state, const MapperConfig& cfg);

/// Runs the optimization loop over the window (round-robin keyframe choice),
/// stepping only Gaussian parameters. Returns the per-iteration loss values.
std::vector<double> map_step(MapState& state, const std::vector<MapObservation>& window,
                             const CameraIntrinsics& intrinsics, const MapperConfig& cfg,
                             int iterations);

}  // namespace gsf
