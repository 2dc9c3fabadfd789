#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gsfield/core/image.hpp"
#include "gsfield/geometry/camera.hpp"
#include "gsfield/geometry/pose.hpp"

namespace gsf {

/// One associated RGB-D observation. Depth is meters with 0 = invalid; values
/// outside the intrinsics' (near, far) range are already mapped to invalid.
struct Frame {
  int index = -1;
  double timestamp = 0.0;
  ImageRGB rgb;                       // [0,1]
  ImageD depth;                       // meters
  std::optional<CameraPose> gt_pose;  // world-to-camera, when ground truth exists
};

/// Sequential frame access that never materializes the whole sequence: each
/// next() call decodes (or renders) exactly one frame.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual int frame_count() const = 0;
  /// The next frame in order, or nullopt once the sequence is exhausted.
  virtual std::optional<Frame> next() = 0;
  virtual void reset() = 0;
};

struct TumLoadStats {
  int matched = 0;
  int skipped_rgb = 0;    // rgb entries without a depth partner in tolerance
  int skipped_depth = 0;  // depth entries left unmatched
};

constexpr double kAssociationTolerance = 0.02;  // seconds

/// Loads a TUM-style directory: rgb.txt / depth.txt index files ("#" comment
/// lines skipped, each data line "timestamp path"), optional groundtruth.txt
/// ("timestamp tx ty tz qx qy qz qw", camera-to-world). RGB and depth entries
/// are associated to the nearest timestamp within 0.02 s; ground-truth poses
/// likewise. Depth images decode via intrinsics.depth_scale.
/// Throws std::runtime_error when an index file is missing or no pair
/// associates.
std::unique_ptr<FrameSource> load_tum_sequence(const std::string& directory,
                                               const CameraIntrinsics& intrinsics,
                                               TumLoadStats* stats = nullptr);

}  // namespace gsf
