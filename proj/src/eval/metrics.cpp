#include "gsfield/eval/metrics.hpp"

#include <json.hpp>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gsfield/eval/kdtree.hpp"

namespace gsf {

namespace {

std::vector<TimedPose> by_time(std::vector<TimedPose> poses) {
  std::stable_sort(poses.begin(), poses.end(),
                   [](const TimedPose& a, const TimedPose& b) { return a.timestamp < b.timestamp; });
  return poses;
}

}  // namespace

std::pair<Mat3, Vec3> rigid_align(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  if (from.size() != to.size()) throw std::invalid_argument("rigid_align: size mismatch");
  if (from.size() < 3) throw std::invalid_argument("rigid_align: need at least 3 point pairs");
  Eigen::Matrix3Xd src(3, from.size()), dst(3, to.size());
  for (size_t i = 0; i < from.size(); ++i) {
    src.col(i) = from[i];
    dst.col(i) = to[i];
  }
  const Eigen::Matrix4d transform = Eigen::umeyama(src, dst, /*with_scaling=*/false);
  return {transform.topLeftCorner<3, 3>(), transform.topRightCorner<3, 1>()};
}

double ate_rmse_cm(const std::vector<TimedPose>& estimated,
                   const std::vector<TimedPose>& ground_truth, double tolerance) {
  const std::vector<TimedPose> est = by_time(estimated);
  const std::vector<TimedPose> gt = by_time(ground_truth);

  // Greedy in-order association, each ground-truth pose consumed at most once.
  std::vector<Vec3> est_pts, gt_pts;
  size_t j = 0;
  for (const TimedPose& e : est) {
    while (j + 1 < gt.size() &&
           std::abs(gt[j + 1].timestamp - e.timestamp) <= std::abs(gt[j].timestamp - e.timestamp))
      ++j;
    if (j < gt.size() && std::abs(gt[j].timestamp - e.timestamp) <= tolerance) {
      est_pts.push_back(e.pose.center());
      gt_pts.push_back(gt[j].pose.center());
      ++j;
      if (j == gt.size()) break;
    }
  }
  if (est_pts.size() < 3) {
    std::ostringstream msg;
    msg << "trajectory association: " << est_pts.size() << " matched of " << est.size()
        << " estimated / " << gt.size() << " ground-truth poses (need 3)";
    throw std::runtime_error(msg.str());
  }

  const auto [r, t] = rigid_align(est_pts, gt_pts);
  double sum_sq = 0.0;
  for (size_t i = 0; i < est_pts.size(); ++i)
    sum_sq += (r * est_pts[i] + t - gt_pts[i]).squaredNorm();
  return 100.0 * std::sqrt(sum_sq / double(est_pts.size()));
}

double depth_l1_cm(const ImageD& rendered, const ImageD& sensor,
                   const CameraIntrinsics& intrinsics) {
  if (rendered.width() != sensor.width() || rendered.height() != sensor.height())
    throw std::invalid_argument("depth_l1: image size mismatch");
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < sensor.size(); ++i) {
    const double s = sensor[i];
    if (!(s > intrinsics.near_plane && s < intrinsics.far_plane)) continue;
    if (!(rendered[i] > 0.0)) continue;
    sum += std::abs(rendered[i] - s);
    ++count;
  }
  return count == 0 ? 0.0 : 100.0 * sum / count;
}

double psnr_db(const ImageRGB& rendered, const ImageRGB& reference) {
  if (rendered.width() != reference.width() || rendered.height() != reference.height())
    throw std::invalid_argument("psnr: image size mismatch");
  double sum_sq = 0.0;
  for (size_t i = 0; i < rendered.size(); ++i) sum_sq += (rendered[i] - reference[i]).squaredNorm();
  const double mse = sum_sq / double(3 * rendered.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

double chamfer_to_surface_cm(const std::vector<Vec3>& means, const std::vector<Vec3>& surface) {
  if (surface.empty()) throw std::invalid_argument("chamfer: empty surface cloud");
  if (means.empty()) return 0.0;
  const KdTree3 tree(surface);
  double sum = 0.0;
  for (const Vec3& m : means) sum += tree.nearest(m).distance;
  return 100.0 * sum / double(means.size());
}

ReconMetrics recon_metrics(const std::vector<Vec3>& predicted,
                           const std::vector<Vec3>& ground_truth) {
  if (predicted.empty() || ground_truth.empty())
    throw std::invalid_argument("recon_metrics: empty point cloud");
  const KdTree3 gt_tree(ground_truth);
  const KdTree3 pred_tree(predicted);

  ReconMetrics out;
  for (const Vec3& p : predicted) out.accuracy_cm += gt_tree.nearest(p).distance;
  out.accuracy_cm *= 100.0 / double(predicted.size());

  int within = 0;
  for (const Vec3& g : ground_truth) {
    const double d = pred_tree.nearest(g).distance;
    out.completion_cm += d;
    if (d < 0.05) ++within;
  }
  out.completion_cm *= 100.0 / double(ground_truth.size());
  out.completion_ratio_pct = 100.0 * double(within) / double(ground_truth.size());
  return out;
}

std::vector<Vec3> filter_observed_points(const std::vector<Vec3>& points,
                                         const std::vector<CameraPose>& views,
                                         const std::vector<ImageD>& depths,
                                         const CameraIntrinsics& intrinsics, double margin) {
  if (views.size() != depths.size())
    throw std::invalid_argument("filter_observed_points: one depth map per view required");
  std::vector<Vec3> kept;
  kept.reserve(points.size());
  for (const Vec3& p : points) {
    bool visible = false;
    for (size_t v = 0; v < views.size() && !visible; ++v) {
      const Vec3 cam = views[v].transform(p);
      if (!(cam.z() > intrinsics.near_plane && cam.z() < intrinsics.far_plane)) continue;
      const Vec2 px = intrinsics.project(cam);
      const int ix = int(std::floor(px.x()));
      const int iy = int(std::floor(px.y()));
      if (ix < 0 || iy < 0 || ix >= intrinsics.width || iy >= intrinsics.height) continue;
      const double d = depths[v](ix, iy);
      visible = !(d > 0.0) || cam.z() <= d + margin;
    }
    if (visible) kept.push_back(p);
  }
  return kept;
}

void write_metrics_report(const std::string& text_path, const std::string& json_path,
                          const std::vector<std::pair<std::string, double>>& entries) {
  std::ofstream text(text_path);
  if (!text) throw std::runtime_error("cannot write metrics report: " + text_path);
  text.precision(12);
  for (const auto& [key, value] : entries) text << key << " = " << value << "\n";

  nlohmann::ordered_json summary;
  for (const auto& [key, value] : entries) summary[key] = value;
  std::ofstream json(json_path);
  if (!json) throw std::runtime_error("cannot write metrics report: " + json_path);
  json << summary.dump(2) << "\n";
}

}  // namespace gsf
