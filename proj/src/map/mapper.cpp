#include "gsfield/map/mapper.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gsf {

namespace {
constexpr double kC0 = 0.28209479177387814;

GaussianPrimitive backprojected_primitive(int x, int y, double depth, const ImageRGB& rgb,
                                          const CameraPose& pose, const CameraIntrinsics& k,
                                          int stride, const MapperConfig& cfg) {
  GaussianPrimitive p;
  const Vec3 p_cam = k.backproject(x + 0.5, y + 0.5, depth);
  p.mean = pose.inverse().transform(p_cam);
  p.log_scale = Vec3::Constant(std::log((depth / k.fx) * stride * 0.5));
  p.quat = Vec4(1, 0, 0, 0);
  p.opacity_logit = logit(cfg.init_opacity);
  p.sh.assign(cfg.sh_coeffs, Vec3::Zero());
  p.sh[0] = (rgb(x, y) - Vec3::Constant(0.5)) / kC0;
  p.uncertainty = 0.0;
  p.observed = true;
  return p;
}

}  // namespace

void MapperConfig::validate() const {
  if (sh_coeffs != 1 && sh_coeffs != 4 && sh_coeffs != 9 && sh_coeffs != 16)
    throw std::invalid_argument("sh coefficient count must be 1, 4, 9 or 16");
  if (init_stride < 1 || spawn_stride < 1)
    throw std::invalid_argument("sampling strides must be at least 1");
  if (!(spawn_opacity_threshold > 0.0 && spawn_opacity_threshold <= 1.0))
    throw std::invalid_argument("spawn opacity threshold must lie in (0, 1]");
  if (!(init_opacity > 0.0 && init_opacity < 1.0))
    throw std::invalid_argument("initial opacity must lie in (0, 1)");
  if (!(scene_extent > 0.0)) throw std::invalid_argument("scene extent must be positive");
  if (iterations < 0 || init_iterations < 0)
    throw std::invalid_argument("iteration counts must be non-negative");
  if (!(densify.split_factor > 1.0))
    throw std::invalid_argument("split factor must exceed 1");
  uncertainty.validate();
  weights.validate();
}

PrimitiveOptimizer::PrimitiveOptimizer(const MapperConfig& cfg)
    : mean(cfg.lr_mean * cfg.scene_extent, 3),
      log_scale(cfg.lr_scale, 3),
      quat(cfg.lr_rotation, 4),
      opacity(cfg.lr_opacity, 1),
      sh(cfg.lr_sh, 3 * cfg.sh_coeffs),
      sh_dim_(3 * cfg.sh_coeffs) {}

void PrimitiveOptimizer::append(size_t count) {
  mean.append(count);
  log_scale.append(count);
  quat.append(count);
  opacity.append(count);
  sh.append(count);
}

void PrimitiveOptimizer::filter(const std::vector<uint8_t>& keep) {
  mean.filter(keep);
  log_scale.filter(keep);
  quat.filter(keep);
  opacity.filter(keep);
  sh.filter(keep);
}

void PrimitiveOptimizer::step(std::vector<GaussianPrimitive>& prims,
                              const GradientBundle& grads) {
  const size_t n = prims.size();
  if (n != entries() || grads.d_mean.size() != n)
    throw std::invalid_argument("optimizer state out of sync with the primitive list");

  auto run = [&](AdamState& opt, auto&& gather_x, auto&& gather_g, auto&& scatter) {
    const size_t dim = n * opt.stride();
    scratch_x_.resize(dim);
    scratch_g_.resize(dim);
    for (size_t i = 0; i < n; ++i) {
      gather_x(i, &scratch_x_[i * opt.stride()]);
      gather_g(i, &scratch_g_[i * opt.stride()]);
    }
    opt.step(scratch_x_.data(), scratch_g_.data());
    for (size_t i = 0; i < n; ++i) scatter(i, &scratch_x_[i * opt.stride()]);
  };

  run(
      mean, [&](size_t i, double* x) { Eigen::Map<Vec3>{x} = prims[i].mean; },
      [&](size_t i, double* g) { Eigen::Map<Vec3>{g} = grads.d_mean[i]; },
      [&](size_t i, const double* x) { prims[i].mean = Eigen::Map<const Vec3>{x}; });
  run(
      log_scale, [&](size_t i, double* x) { Eigen::Map<Vec3>{x} = prims[i].log_scale; },
      [&](size_t i, double* g) { Eigen::Map<Vec3>{g} = grads.d_log_scale[i]; },
      [&](size_t i, const double* x) { prims[i].log_scale = Eigen::Map<const Vec3>{x}; });
  run(
      quat, [&](size_t i, double* x) { Eigen::Map<Vec4>{x} = prims[i].quat; },
      [&](size_t i, double* g) { Eigen::Map<Vec4>{g} = grads.d_quat[i]; },
      [&](size_t i, const double* x) { prims[i].quat = Eigen::Map<const Vec4>{x}; });
  run(
      opacity, [&](size_t i, double* x) { *x = prims[i].opacity_logit; },
      [&](size_t i, double* g) { *g = grads.d_opacity_logit[i]; },
      [&](size_t i, const double* x) { prims[i].opacity_logit = *x; });
  run(
      sh,
      [&](size_t i, double* x) {
        for (int b = 0; b < sh_dim_ / 3; ++b) Eigen::Map<Vec3>{x + 3 * b} = prims[i].sh[b];
      },
      [&](size_t i, double* g) {
        for (int b = 0; b < sh_dim_ / 3; ++b) Eigen::Map<Vec3>{g + 3 * b} = grads.d_sh[i][b];
      },
      [&](size_t i, const double* x) {
        for (int b = 0; b < sh_dim_ / 3; ++b) prims[i].sh[b] = Eigen::Map<const Vec3>{x + 3 * b};
      });
}

void MapState::check_consistent() const {
  const size_t n = primitives.size();
  if (optimizer.entries() != n || grad_accum.size() != n || grad_count.size() != n)
    throw std::logic_error("map state arrays lost co-indexing with the primitive list");
}

MapState initialize_map(const ImageRGB& rgb, const ImageD& depth, const CameraPose& pose,
                        const CameraIntrinsics& k, const MapperConfig& cfg) {
  cfg.validate();
  if (rgb.width() != k.width || rgb.height() != k.height || depth.width() != k.width ||
      depth.height() != k.height)
    throw std::invalid_argument("first frame dimensions do not match the intrinsics");

  MapState state(cfg);
  const ImageMask valid = sensor_valid_mask(depth, k);
  for (int y = 0; y < k.height; y += cfg.init_stride)
    for (int x = 0; x < k.width; x += cfg.init_stride) {
      if (!valid(x, y)) continue;
      state.primitives.push_back(
          backprojected_primitive(x, y, depth(x, y), rgb, pose, k, cfg.init_stride, cfg));
    }
  if (state.primitives.empty())
    throw std::runtime_error("cannot initialize a map: first frame has no usable depth");

  state.optimizer.append(state.primitives.size());
  state.grad_accum.assign(state.primitives.size(), 0.0);
  state.grad_count.assign(state.primitives.size(), 0);
  state.check_consistent();
  return state;
}

int spawn_gaussians(MapState& state, const RenderOutput& rendered, const ImageRGB& rgb,
                    const ImageD& depth, const CameraPose& pose, const CameraIntrinsics& k,
                    const MapperConfig& cfg) {
  if (rendered.width != k.width || rendered.height != k.height)
    throw std::invalid_argument("spawn render dimensions do not match the intrinsics");
  const ImageMask valid = sensor_valid_mask(depth, k);
  int spawned = 0;
  for (int y = 0; y < k.height; y += cfg.spawn_stride)
    for (int x = 0; x < k.width; x += cfg.spawn_stride) {
      if (!valid(x, y)) continue;
      if (rendered.opacity(x, y) >= cfg.spawn_opacity_threshold) continue;
      state.primitives.push_back(
          backprojected_primitive(x, y, depth(x, y), rgb, pose, k, cfg.spawn_stride, cfg));
      ++spawned;
    }
  state.optimizer.append(spawned);
  state.grad_accum.resize(state.primitives.size(), 0.0);
  state.grad_count.resize(state.primitives.size(), 0);
  state.check_consistent();
  return spawned;
}

StructuralChange densify_and_cull(MapState& state, const MapperConfig& cfg) {
  state.check_consistent();
  const size_t n = state.primitives.size();
  const double size_boundary = cfg.densify.size_fraction * cfg.scene_extent;

  StructuralChange change;
  std::vector<uint8_t> keep(n, 1);
  std::vector<GaussianPrimitive> appended;
  for (size_t i = 0; i < n; ++i) {
    const GaussianPrimitive& p = state.primitives[i];
    if (p.opacity() < cfg.densify.cull_opacity) {
      keep[i] = 0;
      ++change.removed;
      continue;
    }
    if (state.grad_count[i] == 0) continue;
    const double mean_grad = state.grad_accum[i] / state.grad_count[i];
    if (mean_grad <= cfg.densify.grad_threshold) continue;

    if (p.scale().maxCoeff() > size_boundary) {
      // Oversized: replace with two children drawn inside the parent footprint.
      keep[i] = 0;
      ++change.split;
      std::normal_distribution<double> gauss(0.0, 1.0);
      const Mat3 basis = p.rotation() * p.scale().asDiagonal();
      for (int child = 0; child < 2; ++child) {
        GaussianPrimitive c = p;
        const Vec3 z(gauss(state.rng), gauss(state.rng), gauss(state.rng));
        c.mean = p.mean + basis * z;
        c.log_scale = p.log_scale - Vec3::Constant(std::log(cfg.densify.split_factor));
        appended.push_back(c);
      }
    } else {
      // Undersized but straining: duplicate and let optimization separate them.
      ++change.cloned;
      appended.push_back(p);
    }
  }

  if (change.removed == 0 && change.split == 0 && change.cloned == 0) {
    state.grad_accum.assign(n, 0.0);
    state.grad_count.assign(n, 0);
    return change;
  }

  std::vector<GaussianPrimitive> next;
  next.reserve(n + appended.size());
  for (size_t i = 0; i < n; ++i)
    if (keep[i]) next.push_back(state.primitives[i]);
  next.insert(next.end(), appended.begin(), appended.end());

  state.optimizer.filter(keep);
  state.optimizer.append(appended.size());
  state.primitives = std::move(next);
  state.grad_accum.assign(state.primitives.size(), 0.0);
  state.grad_count.assign(state.primitives.size(), 0);
  state.check_consistent();
  return change;
}

std::vector<double> map_step(MapState& state, const std::vector<MapObservation>& window,
                             const CameraIntrinsics& k, const MapperConfig& cfg,
                             int iterations) {
  if (window.empty()) throw std::invalid_argument("mapping window is empty");
  for (const MapObservation& ob : window)
    if (!ob.rgb || !ob.depth)
      throw std::invalid_argument("mapping window observation missing rgb or depth");
  state.check_consistent();

  std::vector<double> trace;
  trace.reserve(iterations);
  for (int it = 0; it < iterations; ++it) {
    const MapObservation& ob = window[it % window.size()];
    const RenderResult rr = render(state.primitives, ob.pose, k, ob.depth, cfg.raster);
    MappingLossResult loss = evaluate_mapping_loss(state.primitives, rr, *ob.rgb, *ob.depth, k,
                                                   cfg.weights, /*want_gradients=*/true);
    if (!std::isfinite(loss.total)) {
      std::ostringstream msg;
      msg << "mapping diverged at iteration " << state.iteration << ": total=" << loss.total
          << " color=" << loss.color << " ssim=" << loss.ssim << " geo=" << loss.geo
          << " align=" << loss.align << " iso=" << loss.iso << " var=" << loss.var;
      throw std::runtime_error(msg.str());
    }

    GradientBundle grads = render_backward(state.primitives, ob.pose, k, rr.record,
                                           loss.upstream, ob.depth, cfg.raster);
    for (size_t i = 0; i < loss.d_log_scale_direct.size(); ++i)
      grads.d_log_scale[i] += loss.d_log_scale_direct[i];

    // Screen-space positional gradients feed the densification heuristic in
    // normalized device units, so the threshold is resolution-independent.
    for (size_t i = 0; i < state.primitives.size(); ++i) {
      if (!rr.record.visible[i]) continue;
      const Vec2 ndc(grads.d_mean2d[i].x() * 0.5 * k.width,
                     grads.d_mean2d[i].y() * 0.5 * k.height);
      state.grad_accum[i] += ndc.norm();
      ++state.grad_count[i];
    }

    state.optimizer.step(state.primitives, grads);
    ++state.iteration;
    trace.push_back(loss.total);

    if (cfg.densify.interval > 0 && state.iteration % cfg.densify.interval == 0)
      densify_and_cull(state, cfg);
  }
  return trace;
}

}  // namespace gsf
