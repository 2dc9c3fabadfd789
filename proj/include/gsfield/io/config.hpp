#pragma once

#include <cstdint>
#include <string>

#include "gsfield/geometry/camera.hpp"
#include "gsfield/io/synthetic.hpp"
#include "gsfield/map/mapper.hpp"
#include "gsfield/track/tracker.hpp"

namespace gsf {

/// Everything a full run needs, with defaults tuned for the synthetic indoor
/// setting. All values are reachable as dotted keys (e.g. "loss.w_color",
/// "tracker.iterations") through config files and --set overrides.
struct RunConfig {
  std::string dataset_format = "synthetic";  // "synthetic" or "tum"
  std::string dataset_path;                  // required for "tum"
  std::string output_dir = "runs/out";

  // Desk-scale synthetic camera by default; TUM runs override from calibration.
  CameraIntrinsics intrinsics{80.0, 80.0, 48.0, 36.0, 96, 72, 5000.0, 0.1, 10.0};
  MapperConfig mapper;    // includes loss weights, raster, densify, uncertainty
  TrackerConfig tracker;

  SceneSpec scene;
  TrajectorySpec trajectory;
  NoiseSpec noise;

  uint64_t seed = 0;
  int threads = 1;

  /// Structural checks plus existence of referenced paths.
  void validate() const;
};

/// Parses a "key = value" config file ("#" comments, blank lines allowed).
/// Unknown keys and malformed values fail with the offending line number.
/// An empty file yields all defaults.
RunConfig load_config(const std::string& path);

/// Applies one "key=value" override in the same key namespace as the file
/// format. Throws std::invalid_argument on unknown keys or bad values.
void apply_override(RunConfig& config, const std::string& assignment);

/// Full dump of every key at its current value; parsing it back reproduces
/// the config. Used for run-directory snapshots.
std::string serialize_config(const RunConfig& config);

}  // namespace gsf
