#pragma once

#include <vector>

#include "gsfield/loss/losses.hpp"
#include "gsfield/map/mapper.hpp"
#include "gsfield/track/keyframe.hpp"

namespace gsf {

struct TrackerConfig {
  double lr_rotation = 0.0015;
  double lr_translation = 0.00215;
  int iterations = 15;           // pose refinement steps per frame
  int ba_window = 4;             // keyframes jointly adjusted (k)
  int ba_iterations = 10;
  int keyframe_interval = 30;    // frames between keyframe insertions
  int recent_keyframes = 2;      // always-included newest pool entries (r)
  bool freeze_oldest_pose = true;  // gauge anchor during bundle adjustment
  double degraded_loss_ratio = 2.0;
  void validate() const;
};

/// Constant-velocity guess: re-apply the last inter-frame motion to the last
/// pose. With a single prior there is no velocity, so the prior is returned.
CameraPose predict_pose(const CameraPose& previous, const CameraPose& before_previous);

struct TrackResult {
  CameraPose pose;
  double final_loss = 0.0;
  bool degraded = false;     // loss blew up or the frame offered nothing to track
  int iterations_run = 0;
};

/// Pose-only optimization of the tracking objective against a frozen map,
/// starting from `initial_pose`. The returned loss is evaluated at the
/// returned pose.
TrackResult track_frame(const std::vector<GaussianPrimitive>& map_primitives,
                        const ImageRGB& rgb, const ImageD& depth,
                        const CameraPose& initial_pose, const CameraIntrinsics& intrinsics,
                        const TrackerConfig& cfg, const LossWeights& weights,
                        const RasterConfig& raster);

/// Picks the mapping/adjustment window from the keyframe pool, whose last
/// entry must be the incoming frame: that frame, the most recent r others,
/// then the highest cosine-similarity remainder, truncated to k entries.
/// Similarity ties fall to the more recent keyframe. Returns pool indices,
/// newest-first within each group.
std::vector<int> select_window(const std::vector<KeyframeRecord>& pool,
                               const TrackerConfig& cfg);

/// Joint refinement of window poses and all primitive parameters under the
/// mapping objective summed over the window. The oldest window pose can stay
/// frozen as the gauge anchor. Returns the summed loss per iteration.
std::vector<double> sliding_ba(MapState& map, const std::vector<KeyframeRecord*>& window,
                               const CameraIntrinsics& intrinsics, const TrackerConfig& tcfg,
                               const MapperConfig& mcfg, int iterations);

}  // namespace gsf
