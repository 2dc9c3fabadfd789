#include "gsfield/io/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "gsfield/raster/rasterizer.hpp"

namespace gsf {
namespace {

constexpr double kC0 = 0.28209479177387814;

Vec3 color_to_sh(const Vec3& rgb) { return (rgb - Vec3::Constant(0.5)) / kC0; }

// Smooth per-surface color pattern with per-primitive jitter, so every view
// carries enough texture to constrain the pose.
Vec3 textured_color(double u, double v, const Vec3& phase, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.08, 0.08);
  Vec3 c;
  for (int ch = 0; ch < 3; ++ch)
    c(ch) = 0.5 + 0.33 * std::sin(3.1 * u + phase(ch)) * std::cos(2.3 * v + 1.7 * phase(ch)) +
            jitter(rng);
  return c.cwiseMax(0.02).cwiseMin(0.98);
}

GaussianPrimitive surface_primitive(const Vec3& position, double scale, double opacity,
                                    const Vec3& rgb) {
  GaussianPrimitive p;
  p.mean = position;
  p.log_scale = Vec3::Constant(std::log(scale));
  p.opacity_logit = logit(opacity);
  p.sh.resize(1);
  p.sh[0] = color_to_sh(rgb);
  return p;
}

void add_wall_grid(std::vector<GaussianPrimitive>& prims, const Vec3& origin, const Vec3& u_axis,
                   const Vec3& v_axis, double side, int n, int layers, double opacity,
                   const Vec3& phase, std::mt19937_64& rng) {
  const double spacing = side / n;
  // Tight enough that a pixel's blended depth stays close to the one plane the
  // ray actually hits, wide enough that stacked layers still close the gaps.
  const double scale = 0.55 * spacing;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double u = (i + 0.5) * spacing - 0.5 * side;
      const double v = (j + 0.5) * spacing - 0.5 * side;
      const Vec3 pos = origin + u * u_axis + v * v_axis;
      const Vec3 rgb = textured_color(u, v, phase, rng);
      for (int l = 0; l < layers; ++l) prims.push_back(surface_primitive(pos, scale, opacity, rgb));
    }
}

std::vector<GaussianPrimitive> build_room(const SceneSpec& spec, std::mt19937_64& rng) {
  std::vector<GaussianPrimitive> prims;
  const double h = 0.5 * spec.extent;
  const int layers = std::max(1, spec.wall_layers);
  const int object_budget = std::min(spec.primitive_count / 10, 450);
  const int wall_budget = spec.primitive_count - object_budget;
  const int n = std::max(2, static_cast<int>(std::sqrt(wall_budget / (6.0 * layers))));
  std::uniform_real_distribution<double> uphase(0.0, 6.28);

  const Vec3 x = Vec3::UnitX(), y = Vec3::UnitY(), z = Vec3::UnitZ();
  struct Face {
    Vec3 origin, u, v;
  };
  const Face faces[6] = {
      {h * z, x, y},  {-h * z, x, y},  // front / back walls
      {h * x, z, y},  {-h * x, z, y},  // side walls
      {h * y, x, z},  {-h * y, x, z},  // floor / ceiling
  };
  for (const Face& f : faces) {
    const Vec3 phase(uphase(rng), uphase(rng), uphase(rng));
    add_wall_grid(prims, f.origin, f.u, f.v, spec.extent, n, layers, 0.98, phase, rng);
  }

  // A few ball-shaped objects resting near the floor give the scene parallax
  // structure away from the walls. Each is a dense shell of compact primitives
  // around an opaque core; the core keeps the far hemisphere from bleeding
  // through the near one, so a ball's blended depth is the same from every
  // direction instead of a view-dependent mix across its whole diameter.
  const Vec3 centers[3] = {Vec3(-0.3 * h, 0.62 * h, 0.25 * h), Vec3(0.35 * h, 0.66 * h, -0.2 * h),
                           Vec3(0.05 * h, 0.7 * h, 0.45 * h)};
  const Vec3 tints[3] = {Vec3(0.85, 0.3, 0.25), Vec3(0.25, 0.7, 0.85), Vec3(0.8, 0.75, 0.2)};
  const double radius = 0.12 * spec.extent;
  const int per_object = std::max(object_budget / 3 - 1, 1);
  std::normal_distribution<double> dir(0.0, 1.0);
  std::uniform_real_distribution<double> shade(-0.1, 0.1);
  const double shell_area = 4.0 * M_PI * radius * radius;
  const double obj_scale = 0.7 * std::sqrt(shell_area / per_object);
  for (int o = 0; o < 3; ++o) {
    prims.push_back(surface_primitive(centers[o], 0.45 * radius, 0.995, tints[o]));
    for (int i = 0; i < per_object; ++i) {
      Vec3 d(dir(rng), dir(rng), dir(rng));
      if (d.norm() < 1e-6) d = Vec3::UnitX();
      d.normalize();
      const Vec3 rgb = (tints[o] + Vec3::Constant(shade(rng))).cwiseMax(0.02).cwiseMin(0.98);
      prims.push_back(surface_primitive(centers[o] + radius * d, obj_scale, 0.98, rgb));
    }
  }
  return prims;
}

std::vector<GaussianPrimitive> build_flat_wall(const SceneSpec& spec, std::mt19937_64& rng) {
  std::vector<GaussianPrimitive> prims;
  const int layers = std::max(1, spec.wall_layers);
  const int n = std::max(2, static_cast<int>(std::sqrt(spec.primitive_count / double(layers))));
  std::uniform_real_distribution<double> uphase(0.0, 6.28);
  const Vec3 phase(uphase(rng), uphase(rng), uphase(rng));
  // Slightly larger footprints than the room walls: the point of this scene is
  // full per-ray opacity saturation at a single depth.
  const double spacing = spec.extent / n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double u = (i + 0.5) * spacing - 0.5 * spec.extent;
      const double v = (j + 0.5) * spacing - 0.5 * spec.extent;
      const Vec3 pos(u, v, 0.5 * spec.extent);
      const Vec3 rgb = textured_color(u, v, phase, rng);
      for (int l = 0; l < layers; ++l)
        prims.push_back(surface_primitive(pos, 0.8 * spacing, 0.98, rgb));
    }
  return prims;
}

CameraPose look_at(const Vec3& position, const Vec3& target) {
  const Vec3 forward = (target - position).normalized();
  Vec3 right = forward.cross(Vec3::UnitY());
  if (right.norm() < 1e-9) right = Vec3::UnitX();
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.row(0) = right;
  r.row(1) = down;
  r.row(2) = forward;
  return CameraPose::from_matrix(r, -(r * position));
}

// Fraction of the path covered by frame i. With no ramp this is i/(frames-1);
// otherwise speed grows linearly from rest over the first ramp_frames steps,
// mimicking a rig that starts stationary, then stays constant.
std::vector<double> path_fractions(int frames, int ramp_frames) {
  std::vector<double> s(frames, 0.0);
  if (frames < 2) return s;
  const int ramp = std::clamp(ramp_frames, 0, frames - 1);
  double total = 0.0;
  std::vector<double> v(frames - 1);
  for (int j = 0; j < frames - 1; ++j) {
    v[j] = ramp > 0 ? std::min(1.0, (j + 0.5) / ramp) : 1.0;
    total += v[j];
  }
  for (int i = 1; i < frames; ++i) s[i] = s[i - 1] + v[i - 1] / total;
  s[frames - 1] = 1.0;
  return s;
}

std::vector<CameraPose> build_trajectory(const TrajectorySpec& spec) {
  if (spec.frames < 1) throw std::invalid_argument("trajectory needs at least one frame");
  std::vector<CameraPose> poses;
  poses.reserve(spec.frames);
  const std::vector<double> s = path_fractions(spec.frames, spec.ramp_frames);
  switch (spec.kind) {
    case TrajectoryKind::orbit: {
      if (!(spec.radius > 0.0)) throw std::invalid_argument("orbit radius must be positive");
      if (spec.frames > 1 && spec.sweep_radians == 0.0)
        throw std::invalid_argument("degenerate trajectory: zero sweep with multiple frames");
      for (int i = 0; i < spec.frames; ++i) {
        const double theta = spec.sweep_radians * s[i];
        const Vec3 p(spec.radius * std::cos(theta), spec.height, spec.radius * std::sin(theta));
        poses.push_back(look_at(p, Vec3(0.0, spec.height, 0.0)));
      }
      break;
    }
    case TrajectoryKind::lateral: {
      if (spec.frames > 1 && spec.length == 0.0)
        throw std::invalid_argument("degenerate trajectory: zero length with multiple frames");
      for (int i = 0; i < spec.frames; ++i) {
        const Vec3 p(-0.5 * spec.length + spec.length * s[i], spec.height, 0.0);
        poses.push_back({Vec3::Zero(), -p});
      }
      break;
    }
  }
  return poses;
}

uint64_t frame_stream_seed(uint64_t seed, int index) {
  // splitmix64 of (seed, index) so frame content is independent of pull order
  uint64_t x = seed + 0x9E3779B97F4A7C15ULL * static_cast<uint64_t>(index + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

SyntheticSource::SyntheticSource(const SceneSpec& scene, const TrajectorySpec& trajectory,
                                 const NoiseSpec& noise, const CameraIntrinsics& intrinsics,
                                 uint64_t seed)
    : noise_(noise), intrinsics_(intrinsics), seed_(seed) {
  intrinsics_.validate();
  if (scene.primitive_count < 1) throw std::invalid_argument("scene needs at least one primitive");
  poses_ = build_trajectory(trajectory);
  std::mt19937_64 rng(seed);
  primitives_ = scene.kind == SceneKind::room ? build_room(scene, rng) : build_flat_wall(scene, rng);
  raster_.threads = 1;
}

Frame SyntheticSource::frame(int index) const {
  if (index < 0 || index >= frame_count()) throw std::out_of_range("synthetic frame index");
  const RenderOutput out =
      render_reference(primitives_, poses_[index], intrinsics_, nullptr, raster_);

  Frame f;
  f.index = index;
  f.timestamp = index / 30.0;
  f.rgb = out.color;
  f.depth = ImageD(out.width, out.height, 0.0);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const double d = out.alpha_depth(x, y);
      if (d > intrinsics_.near_plane && d < intrinsics_.far_plane) f.depth(x, y) = d;
    }
  f.gt_pose = poses_[index];

  std::mt19937_64 rng(frame_stream_seed(seed_, index));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> pick(0.0, 1.0);
  if (noise_.color_sigma > 0.0)
    for (size_t i = 0; i < f.rgb.size(); ++i) {
      const Vec3 n(gauss(rng), gauss(rng), gauss(rng));
      f.rgb[i] = (f.rgb[i] + noise_.color_sigma * n).cwiseMax(0.0).cwiseMin(1.0);
    }
  if (noise_.depth_sigma > 0.0 || noise_.outlier_fraction > 0.0)
    for (size_t i = 0; i < f.depth.size(); ++i) {
      if (f.depth[i] == 0.0) continue;
      if (noise_.depth_sigma > 0.0) f.depth[i] += noise_.depth_sigma * gauss(rng);
      if (noise_.outlier_fraction > 0.0 && pick(rng) < noise_.outlier_fraction)
        f.depth[i] += noise_.outlier_sigma * gauss(rng);
      if (!(f.depth[i] > intrinsics_.near_plane && f.depth[i] < intrinsics_.far_plane))
        f.depth[i] = 0.0;
    }
  return f;
}

std::optional<Frame> SyntheticSource::next() {
  if (cursor_ >= frame_count()) return std::nullopt;
  return frame(cursor_++);
}

std::unique_ptr<SyntheticSource> generate_synthetic_sequence(const SceneSpec& scene,
                                                             const TrajectorySpec& trajectory,
                                                             const NoiseSpec& noise,
                                                             const CameraIntrinsics& intrinsics,
                                                             uint64_t seed) {
  return std::make_unique<SyntheticSource>(scene, trajectory, noise, intrinsics, seed);
}

}  // namespace gsf
