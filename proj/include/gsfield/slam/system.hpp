#pragma once

#include <optional>
#include <vector>

#include "gsfield/eval/metrics.hpp"
#include "gsfield/io/config.hpp"
#include "gsfield/io/dataset.hpp"
#include "gsfield/map/mapper.hpp"
#include "gsfield/track/keyframe.hpp"
#include "gsfield/track/tracker.hpp"

namespace gsf {

/// Per-frame record of what the pipeline did and how long each stage took.
/// Millisecond fields are wall-clock measurements; everything else is
/// deterministic under a fixed seed and thread count.
struct FrameLog {
  int frame = -1;
  double timestamp = 0.0;
  double track_loss = 0.0;
  int track_iterations = 0;
  bool track_degraded = false;
  bool keyframe = false;
  int primitives = 0;
  double track_ms = 0.0;
  double map_ms = 0.0;      // map_step on the selected window
  double ba_ms = 0.0;       // joint pose/map adjustment
  double uncertainty_ms = 0.0;
  double spawn_ms = 0.0;
  // Keyframe-only rendering quality against the keyframe's own observation,
  // measured after mapping and before new primitives spawn.
  double kf_psnr_db = 0.0;
  double kf_depth_l1_cm = 0.0;
};

/// Sequential tracking-and-mapping pipeline: frames stream in one at a time,
/// alternating pose tracking against the frozen map with keyframe-triggered
/// map optimization, joint adjustment, uncertainty pruning, and spawning.
class SlamSystem {
 public:
  explicit SlamSystem(const RunConfig& config);

  /// Runs the whole per-frame pipeline. Frames must arrive in stream order;
  /// the first one bootstraps the map from its depth image.
  void process(const Frame& frame);

  const std::vector<TimedPose>& trajectory() const { return trajectory_; }
  const std::vector<KeyframeRecord>& keyframes() const { return keyframes_; }
  const std::vector<FrameLog>& logs() const { return logs_; }
  const MapState& map() const;
  int degraded_frames() const { return degraded_frames_; }

 private:
  void bootstrap(const Frame& frame, FrameLog& log);
  void keyframe_cycle(const Frame& frame, FrameLog& log);

  RunConfig cfg_;
  std::optional<MapState> map_;
  std::vector<KeyframeRecord> keyframes_;
  std::vector<TimedPose> trajectory_;
  std::vector<FrameLog> logs_;
  CameraPose prev_pose_, prev_prev_pose_;
  int degraded_frames_ = 0;
};

}  // namespace gsf
