#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gsfield/core/image.hpp"
#include "gsfield/geometry/camera.hpp"
#include "gsfield/geometry/pose.hpp"

namespace gsf {

struct TimedPose {
  double timestamp = 0.0;
  CameraPose pose;  // world-to-camera, as everywhere else
};

/// Least-squares rigid motion (rotation + translation, no scale) taking
/// `from[i]` onto `to[i]`. Needs >= 3 point pairs.
std::pair<Mat3, Vec3> rigid_align(const std::vector<Vec3>& from, const std::vector<Vec3>& to);

/// Root-mean-square translational error in centimeters after timestamp
/// association and rigid alignment of the estimated camera centers to the
/// ground-truth centers. Throws when fewer than three poses associate; the
/// message carries the matched/total counts.
double ate_rmse_cm(const std::vector<TimedPose>& estimated,
                   const std::vector<TimedPose>& ground_truth, double tolerance = 0.02);

/// Mean absolute depth difference in centimeters over pixels where the sensor
/// reading is usable and the render produced a depth estimate.
double depth_l1_cm(const ImageD& rendered, const ImageD& sensor, const CameraIntrinsics& intrinsics);

/// Peak signal-to-noise ratio in dB on unit-range images; identical inputs
/// return +infinity.
double psnr_db(const ImageRGB& rendered, const ImageRGB& reference);

/// One-sided mean nearest-neighbor distance (cm) from each point in `means`
/// to the surface cloud. Empty `means` gives 0; an empty surface is an error.
double chamfer_to_surface_cm(const std::vector<Vec3>& means, const std::vector<Vec3>& surface);

struct ReconMetrics {
  double accuracy_cm = 0.0;          // mean predicted -> GT nearest distance
  double completion_cm = 0.0;        // mean GT -> predicted nearest distance
  double completion_ratio_pct = 0.0; // GT points within 5 cm of a prediction
};

ReconMetrics recon_metrics(const std::vector<Vec3>& predicted, const std::vector<Vec3>& ground_truth);

/// Keeps the ground-truth points that at least one view actually observed:
/// the projection lands inside the image, the camera-space depth is inside
/// (near, far), and the point is not hidden behind the view's depth map by
/// more than `margin` meters. Pixels without a depth reading cannot prove
/// occlusion and count as visible.
std::vector<Vec3> filter_observed_points(const std::vector<Vec3>& points,
                                         const std::vector<CameraPose>& views,
                                         const std::vector<ImageD>& depths,
                                         const CameraIntrinsics& intrinsics, double margin = 0.02);

/// Writes the metric summary twice: a flat "key = value" text file and a JSON
/// object, preserving entry order in the text form.
void write_metrics_report(const std::string& text_path, const std::string& json_path,
                          const std::vector<std::pair<std::string, double>>& entries);

}  // namespace gsf
