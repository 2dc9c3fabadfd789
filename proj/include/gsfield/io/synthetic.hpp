#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "gsfield/geometry/primitive.hpp"
#include "gsfield/io/dataset.hpp"
#include "gsfield/raster/config.hpp"

namespace gsf {

enum class SceneKind {
  room,      // textured box interior with a few floor objects
  flat_wall  // stacked fronto-parallel plane; every ray meets one depth
};

struct SceneSpec {
  SceneKind kind = SceneKind::room;
  int primitive_count = 5000;
  double extent = 4.0;   // room edge length / wall width, meters
  int wall_layers = 3;   // coincident opacity layers per surface
};

enum class TrajectoryKind {
  orbit,   // circle with inward look-at
  lateral  // straight sideways track at constant orientation
};

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::orbit;
  int frames = 50;
  double radius = 1.0;          // orbit radius
  double sweep_radians = 6.283185307179586;
  double length = 1.0;          // lateral track length
  double height = 0.0;          // vertical offset of the camera path
  int ramp_frames = 0;          // accelerate from rest over this many frames
};

/// Applied to rendered frames, never to the ground truth.
struct NoiseSpec {
  double depth_sigma = 0.0;        // meters, valid pixels only
  double color_sigma = 0.0;        // per channel, clamped back to [0,1]
  double outlier_fraction = 0.0;   // share of valid depth pixels hit by outliers
  double outlier_sigma = 0.0;      // meters
};

/// Renders frames lazily from an internally generated ground-truth primitive
/// set via the per-pixel reference renderer, then applies the noise spec.
/// Every frame is a pure function of (specs, seed, index), so streaming order
/// never changes the output.
class SyntheticSource final : public FrameSource {
 public:
  SyntheticSource(const SceneSpec& scene, const TrajectorySpec& trajectory,
                  const NoiseSpec& noise, const CameraIntrinsics& intrinsics, uint64_t seed);

  const std::vector<GaussianPrimitive>& ground_truth() const { return primitives_; }
  const std::vector<CameraPose>& poses() const { return poses_; }

  Frame frame(int index) const;  // random access used by tests and evaluation

  int frame_count() const override { return static_cast<int>(poses_.size()); }
  std::optional<Frame> next() override;
  void reset() override { cursor_ = 0; }

 private:
  std::vector<GaussianPrimitive> primitives_;
  std::vector<CameraPose> poses_;
  NoiseSpec noise_;
  CameraIntrinsics intrinsics_;
  RasterConfig raster_;
  uint64_t seed_;
  int cursor_ = 0;
};

std::unique_ptr<SyntheticSource> generate_synthetic_sequence(const SceneSpec& scene,
                                                             const TrajectorySpec& trajectory,
                                                             const NoiseSpec& noise,
                                                             const CameraIntrinsics& intrinsics,
                                                             uint64_t seed);

}  // namespace gsf
