#include "gsfield/io/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gsfield/io/image_io.hpp"

namespace gsf {
namespace {

struct IndexEntry {
  double timestamp;
  std::string path;
};

std::vector<IndexEntry> read_index(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("missing index file: " + file.string());
  std::vector<IndexEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    IndexEntry e;
    if (!(ls >> e.timestamp >> e.path))
      throw std::runtime_error("malformed line in " + file.string() + ": " + line);
    entries.push_back(std::move(e));
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const IndexEntry& a, const IndexEntry& b) { return a.timestamp < b.timestamp; });
  return entries;
}

struct StampedPose {
  double timestamp;
  CameraPose world_to_camera;
};

Mat3 quat_to_rotation(double qw, double qx, double qy, double qz) {
  const double n = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
  if (!(n > 0.0)) throw std::runtime_error("ground-truth pose has a zero quaternion");
  const double w = qw / n, x = qx / n, y = qy / n, z = qz / n;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

std::vector<StampedPose> read_groundtruth(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::vector<StampedPose> poses;
  if (!in) return poses;  // ground truth is optional
  std::string line;
  while (std::getline(in, line)) {
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw std::runtime_error("malformed line in " + file.string() + ": " + line);
    // File convention is camera-to-world; invert into the world-to-camera form
    // used everywhere internally.
    const Mat3 r = quat_to_rotation(qw, qx, qy, qz);
    poses.push_back({t, CameraPose::from_matrix(r.transpose(), -(r.transpose() * Vec3(tx, ty, tz)))});
  }
  std::stable_sort(poses.begin(), poses.end(),
                   [](const StampedPose& a, const StampedPose& b) { return a.timestamp < b.timestamp; });
  return poses;
}

const StampedPose* nearest_pose(const std::vector<StampedPose>& poses, double t) {
  if (poses.empty()) return nullptr;
  const auto it = std::lower_bound(
      poses.begin(), poses.end(), t,
      [](const StampedPose& p, double stamp) { return p.timestamp < stamp; });
  const StampedPose* best = nullptr;
  double best_dt = kAssociationTolerance;
  if (it != poses.end() && std::abs(it->timestamp - t) <= best_dt) {
    best = &*it;
    best_dt = std::abs(it->timestamp - t);
  }
  if (it != poses.begin() && std::abs(std::prev(it)->timestamp - t) < best_dt)
    best = &*std::prev(it);
  return best;
}

struct AssociatedEntry {
  double timestamp;
  std::string rgb_path;
  std::string depth_path;
  std::optional<CameraPose> gt_pose;
};

class TumSource final : public FrameSource {
 public:
  TumSource(std::vector<AssociatedEntry> entries, CameraIntrinsics k)
      : entries_(std::move(entries)), intrinsics_(k) {}

  int frame_count() const override { return static_cast<int>(entries_.size()); }

  std::optional<Frame> next() override {
    if (cursor_ >= entries_.size()) return std::nullopt;
    const AssociatedEntry& e = entries_[cursor_];
    Frame f;
    f.index = static_cast<int>(cursor_);
    f.timestamp = e.timestamp;
    f.rgb = load_color_png(e.rgb_path);
    f.depth = load_depth_png(e.depth_path, intrinsics_.depth_scale, intrinsics_.near_plane,
                             intrinsics_.far_plane);
    f.gt_pose = e.gt_pose;
    if (f.rgb.width() != intrinsics_.width || f.rgb.height() != intrinsics_.height ||
        f.depth.width() != intrinsics_.width || f.depth.height() != intrinsics_.height) {
      throw std::runtime_error("frame " + std::to_string(f.index) +
                               " does not match the configured camera size: " + e.rgb_path);
    }
    ++cursor_;
    return f;
  }

  void reset() override { cursor_ = 0; }

 private:
  std::vector<AssociatedEntry> entries_;
  CameraIntrinsics intrinsics_;
  size_t cursor_ = 0;
};

}  // namespace

std::unique_ptr<FrameSource> load_tum_sequence(const std::string& directory,
                                               const CameraIntrinsics& intrinsics,
                                               TumLoadStats* stats) {
  intrinsics.validate();
  const std::filesystem::path dir(directory);
  const std::vector<IndexEntry> rgb = read_index(dir / "rgb.txt");
  const std::vector<IndexEntry> depth = read_index(dir / "depth.txt");
  const std::vector<StampedPose> gt = read_groundtruth(dir / "groundtruth.txt");

  TumLoadStats local;
  std::vector<AssociatedEntry> entries;
  size_t j = 0;
  for (const IndexEntry& r : rgb) {
    // Walk the depth list forward to the entry nearest this color timestamp;
    // each depth frame is consumed at most once.
    while (j + 1 < depth.size() &&
           std::abs(depth[j + 1].timestamp - r.timestamp) <= std::abs(depth[j].timestamp - r.timestamp))
      ++j;
    if (j < depth.size() && std::abs(depth[j].timestamp - r.timestamp) <= kAssociationTolerance) {
      AssociatedEntry e;
      e.timestamp = r.timestamp;
      e.rgb_path = (dir / r.path).string();
      e.depth_path = (dir / depth[j].path).string();
      if (const StampedPose* p = nearest_pose(gt, r.timestamp)) e.gt_pose = p->world_to_camera;
      entries.push_back(std::move(e));
      ++j;
      ++local.matched;
    } else {
      ++local.skipped_rgb;
    }
  }
  local.skipped_depth = static_cast<int>(depth.size()) - local.matched;
  if (stats) *stats = local;
  if (entries.empty())
    throw std::runtime_error("no rgb-depth pairs associate within " +
                             std::to_string(kAssociationTolerance) + " s in " + directory);
  return std::make_unique<TumSource>(std::move(entries), intrinsics);
}

}  // namespace gsf
