#include "gsfield/raster/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gsfield/core/parallel.hpp"
#include "gsfield/geometry/projection.hpp"
#include "gsfield/raster/sh.hpp"

namespace gsf {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

struct PrimCache {
  ProjectedGaussian proj;
  Vec3 color = Vec3::Zero();
  double sigma = 0.0;
};

struct Contrib {
  int32_t id;
  double alpha;
  double transmittance;  // before blending this contributor
};

void validate_primitives(const std::vector<GaussianPrimitive>& prims) {
  for (size_t i = 0; i < prims.size(); ++i) {
    const auto& p = prims[i];
    bool ok = p.mean.allFinite() && p.log_scale.allFinite() && p.quat.allFinite() &&
              std::isfinite(p.opacity_logit) && p.quat.norm() > 1e-12;
    for (const auto& c : p.sh) ok = ok && c.allFinite();
    if (!ok)
      throw std::invalid_argument("render: primitive " + std::to_string(i) +
                                  " has non-finite parameters");
  }
}

std::vector<PrimCache> project_all(const std::vector<GaussianPrimitive>& prims,
                                   const CameraPose& pose, const CameraIntrinsics& k,
                                   const RasterConfig& cfg, int threads) {
  std::vector<PrimCache> cache(prims.size());
  const Vec3 cam_center = pose.center();
  parallel_for(prims.size(), threads, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      const auto& p = prims[i];
      PrimCache& c = cache[i];
      const double support = cfg.footprint_sigma * std::exp(p.log_scale.maxCoeff());
      c.proj = project_gaussian(p.mean, p.covariance(), pose, k, cfg.dilation, cfg.footprint_sigma,
                                support);
      if (!c.proj.visible) continue;
      c.sigma = p.opacity();
      Vec3 dir = p.mean - cam_center;
      const double len = dir.norm();
      dir = len > 1e-12 ? Vec3(dir / len) : Vec3(0, 0, 1);
      c.color = p.sh.empty() ? Vec3::Constant(0.5) : eval_sh_color(p.sh, dir);
    }
  });
  return cache;
}

std::vector<int32_t> sorted_visible(const std::vector<PrimCache>& cache) {
  std::vector<int32_t> ids;
  ids.reserve(cache.size());
  for (size_t i = 0; i < cache.size(); ++i)
    if (cache[i].proj.visible) ids.push_back(static_cast<int32_t>(i));
  std::sort(ids.begin(), ids.end(), [&](int32_t a, int32_t b) {
    const double da = cache[a].proj.depth, db = cache[b].proj.depth;
    return da < db || (da == db && a < b);
  });
  return ids;
}

struct PixelResult {
  Vec3 color = Vec3::Zero();
  double alpha_depth = 0.0;
  double opacity = 0.0;
  double uncertainty = 0.0;
  double final_t = 1.0;
  double median_depth = 0.0;
  int32_t median_prim = -1;
  int32_t dominant = -1;
  int32_t count = 0;
};

/// Front-to-back blend of one pixel over a depth-sorted id span. The same
/// routine backs the tiled renderer and the brute-force reference so both skip
/// exactly the same primitive/pixel pairs.
void blend_pixel(double px, double py, const int32_t* ids, size_t n,
                 const std::vector<PrimCache>& cache, double obs_depth, bool obs_valid,
                 const RasterConfig& cfg, bool allow_termination, PixelResult& r,
                 std::vector<Contrib>* contribs) {
  const double cutoff = cfg.footprint_sigma * cfg.footprint_sigma;
  double t = 1.0;
  double best_weight = 0.0;
  for (size_t s = 0; s < n; ++s) {
    const int32_t id = ids[s];
    const PrimCache& c = cache[id];
    const double dx = px - c.proj.mean2d.x();
    const double dy = py - c.proj.mean2d.y();
    const double rho = c.proj.conic(0, 0) * dx * dx + 2.0 * c.proj.conic(0, 1) * dx * dy +
                       c.proj.conic(1, 1) * dy * dy;
    if (rho > cutoff || rho < 0.0) continue;
    const double g = std::exp(-0.5 * rho);
    const double raw_alpha = c.sigma * g;
    if (raw_alpha < cfg.alpha_skip) continue;
    const double alpha = std::min(raw_alpha, cfg.alpha_clamp);

    const double w = alpha * t;
    r.color += w * c.color;
    r.alpha_depth += w * c.proj.depth;
    r.opacity += w;
    if (obs_valid) {
      const double e = c.proj.depth - obs_depth;
      r.uncertainty += w * e * e;
    }
    if (w > best_weight) {
      best_weight = w;
      r.dominant = id;
    }
    if (contribs) contribs->push_back({id, alpha, t});
    ++r.count;

    const double t_next = t * (1.0 - alpha);
    if (r.median_prim < 0 && t >= 0.5 && t_next < 0.5) {
      r.median_prim = id;
      r.median_depth = c.proj.depth;
    }
    t = t_next;
    if (allow_termination && t < cfg.termination_threshold) break;
  }
  r.final_t = t;
}

void check_observed(const ImageD* obs, const CameraIntrinsics& k) {
  if (obs && (obs->width() != k.width || obs->height() != k.height))
    throw std::invalid_argument("render: observed depth dimensions do not match intrinsics");
}

inline bool depth_sample_valid(double d, const CameraIntrinsics& k) {
  return std::isfinite(d) && d > k.near_plane && d < k.far_plane;
}

void store_pixel(const PixelResult& r, int x, int y, RenderOutput& out, BlendRecord* rec) {
  out.color(x, y) = r.color;
  out.alpha_depth(x, y) = r.alpha_depth;
  out.median_depth(x, y) = r.median_depth;
  out.median_valid(x, y) = r.median_prim >= 0 ? 1 : 0;
  out.opacity(x, y) = r.opacity;
  out.uncertainty(x, y) = r.uncertainty;
  out.final_transmittance(x, y) = r.final_t;
  out.per_pixel_count(x, y) = r.count;
  if (rec) {
    rec->dominant(x, y) = r.dominant;
    rec->median_prim(x, y) = r.median_prim;
  }
}

}  // namespace

RenderResult render(const std::vector<GaussianPrimitive>& prims, const CameraPose& pose,
                    const CameraIntrinsics& k, const ImageD* observed_depth,
                    const RasterConfig& cfg) {
  k.validate();
  validate_primitives(prims);
  check_observed(observed_depth, k);
  const int threads = resolve_threads(cfg.threads);
  const int w = k.width, h = k.height;

  RenderResult result;
  RenderOutput& out = result.out;
  BlendRecord& rec = result.record;
  out.init(w, h);
  out.has_uncertainty = observed_depth != nullptr;
  rec.width = w;
  rec.height = h;
  rec.num_primitives = static_cast<int>(prims.size());
  rec.dominant.resize(w, h, -1);
  rec.median_prim.resize(w, h, -1);
  rec.visible.assign(prims.size(), 0);

  const std::vector<PrimCache> cache = project_all(prims, pose, k, cfg, threads);
  for (size_t i = 0; i < cache.size(); ++i) rec.visible[i] = cache[i].proj.visible ? 1 : 0;
  const std::vector<int32_t> sorted = sorted_visible(cache);

  // Assign sorted primitives to every tile their footprint disc overlaps; each
  // tile list inherits the global depth order.
  const int ts = cfg.tile_size;
  const int tiles_x = (w + ts - 1) / ts;
  const int tiles_y = (h + ts - 1) / ts;
  std::vector<std::vector<int32_t>> tile_lists(static_cast<size_t>(tiles_x) * tiles_y);
  for (const int32_t id : sorted) {
    const auto& p = cache[id].proj;
    const int tx0 = std::clamp(static_cast<int>(std::floor((p.mean2d.x() - p.radius) / ts)), 0,
                               tiles_x - 1);
    const int tx1 = std::clamp(static_cast<int>(std::floor((p.mean2d.x() + p.radius) / ts)), 0,
                               tiles_x - 1);
    const int ty0 = std::clamp(static_cast<int>(std::floor((p.mean2d.y() - p.radius) / ts)), 0,
                               tiles_y - 1);
    const int ty1 = std::clamp(static_cast<int>(std::floor((p.mean2d.y() + p.radius) / ts)), 0,
                               tiles_y - 1);
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        tile_lists[static_cast<size_t>(ty) * tiles_x + tx].push_back(id);
  }

  std::vector<std::vector<Contrib>> per_pixel(static_cast<size_t>(w) * h);
  parallel_for(tile_lists.size(), threads, [&](size_t lo, size_t hi) {
    for (size_t t = lo; t < hi; ++t) {
      const auto& list = tile_lists[t];
      const int tx = static_cast<int>(t) % tiles_x;
      const int ty = static_cast<int>(t) / tiles_x;
      const int x1 = std::min(w, (tx + 1) * ts);
      const int y1 = std::min(h, (ty + 1) * ts);
      for (int y = ty * ts; y < y1; ++y) {
        for (int x = tx * ts; x < x1; ++x) {
          PixelResult r;
          double obs_d = 0.0;
          bool obs_ok = false;
          if (observed_depth) {
            obs_d = (*observed_depth)(x, y);
            obs_ok = depth_sample_valid(obs_d, k);
          }
          std::vector<Contrib>& contribs = per_pixel[static_cast<size_t>(y) * w + x];
          blend_pixel(x + 0.5, y + 0.5, list.data(), list.size(), cache, obs_d, obs_ok, cfg,
                      /*allow_termination=*/true, r, &contribs);
          store_pixel(r, x, y, out, &rec);
        }
      }
    }
  });

  // Flatten the per-pixel lists into CSR form, row-major.
  size_t total = 0;
  rec.row_start.resize(static_cast<size_t>(w) * h + 1);
  for (size_t p = 0; p < per_pixel.size(); ++p) {
    rec.row_start[p] = static_cast<uint32_t>(total);
    total += per_pixel[p].size();
  }
  rec.row_start.back() = static_cast<uint32_t>(total);
  rec.prim.resize(total);
  rec.alpha.resize(total);
  rec.transmittance.resize(total);
  size_t at = 0;
  for (const auto& list : per_pixel) {
    for (const Contrib& c : list) {
      rec.prim[at] = c.id;
      rec.alpha[at] = c.alpha;
      rec.transmittance[at] = c.transmittance;
      ++at;
    }
  }
  return result;
}

RenderOutput render_reference(const std::vector<GaussianPrimitive>& prims, const CameraPose& pose,
                              const CameraIntrinsics& k, const ImageD* observed_depth,
                              const RasterConfig& cfg) {
  k.validate();
  validate_primitives(prims);
  check_observed(observed_depth, k);
  const int threads = resolve_threads(cfg.threads);
  const int w = k.width, h = k.height;

  RenderOutput out;
  out.init(w, h);
  out.has_uncertainty = observed_depth != nullptr;

  const std::vector<PrimCache> cache = project_all(prims, pose, k, cfg, threads);
  const std::vector<int32_t> sorted = sorted_visible(cache);

  parallel_for(static_cast<size_t>(h), threads, [&](size_t lo, size_t hi) {
    for (size_t y = lo; y < hi; ++y) {
      for (int x = 0; x < w; ++x) {
        PixelResult r;
        double obs_d = 0.0;
        bool obs_ok = false;
        if (observed_depth) {
          obs_d = (*observed_depth)(x, static_cast<int>(y));
          obs_ok = depth_sample_valid(obs_d, k);
        }
        blend_pixel(x + 0.5, y + 0.5, sorted.data(), sorted.size(), cache, obs_d, obs_ok, cfg,
                    /*allow_termination=*/false, r, nullptr);
        store_pixel(r, x, static_cast<int>(y), out, nullptr);
      }
    }
  });
  return out;
}

namespace {

/// Screen-space adjoints accumulated per primitive before the geometry chain.
struct ScreenGrad {
  Vec2 d_mean2d = Vec2::Zero();
  Mat2 d_cov2d = Mat2::Zero();
  double d_sigma = 0.0;
  Vec3 d_color = Vec3::Zero();
  double d_depth = 0.0;

  bool zero() const {
    return d_mean2d.isZero(0.0) && d_cov2d.isZero(0.0) && d_sigma == 0.0 &&
           d_color.isZero(0.0) && d_depth == 0.0;
  }
};

struct TileGrads {
  std::vector<int32_t> ids;       // first-appearance order within the tile
  std::vector<ScreenGrad> grads;  // co-indexed with ids
};

// d R(q)/d q_k for a unit quaternion (w, x, y, z), k in {w, x, y, z}.
void rotation_quat_jacobians(const Vec4& q, Mat3 j[4]) {
  const double w = q(0), x = q(1), y = q(2), z = q(3);
  j[0] << 0, -z, y,
          z, 0, -x,
          -y, x, 0;
  j[1] << 0, y, z,
          y, -2 * x, -w,
          z, w, -2 * x;
  j[2] << -2 * y, x, w,
          x, 0, z,
          -w, z, -2 * y;
  j[3] << -2 * z, -w, x,
          w, -2 * z, y,
          x, y, 0;
  for (int k = 0; k < 4; ++k) j[k] *= 2.0;
}

}  // namespace

GradientBundle render_backward(const std::vector<GaussianPrimitive>& prims, const CameraPose& pose,
                               const CameraIntrinsics& k, const BlendRecord& rec,
                               const UpstreamGradients& up, const ImageD* observed_depth,
                               const RasterConfig& cfg) {
  k.validate();
  validate_primitives(prims);
  check_observed(observed_depth, k);
  if (rec.num_primitives != static_cast<int>(prims.size()))
    throw std::invalid_argument("render_backward: record does not match the primitive list");
  if (rec.width != k.width || rec.height != k.height)
    throw std::invalid_argument("render_backward: record dimensions do not match intrinsics");

  const int w = k.width, h = k.height;
  auto check_map = [&](const auto& img, const char* name) {
    if (!img.empty() && (img.width() != w || img.height() != h))
      throw std::invalid_argument(std::string("render_backward: upstream gradient ") + name +
                                  " has wrong dimensions");
    return !img.empty();
  };
  const bool use_color = check_map(up.d_color, "color");
  const bool use_adepth = check_map(up.d_alpha_depth, "alpha_depth");
  const bool use_mdepth = check_map(up.d_median_depth, "median_depth");
  const bool use_opacity = check_map(up.d_opacity, "opacity");
  const bool use_uncert = check_map(up.d_uncertainty, "uncertainty") &&
                          cfg.uncertainty_full_gradient;
  if (use_uncert && !observed_depth)
    throw std::invalid_argument("render_backward: uncertainty gradient needs observed depth");

  const int threads = resolve_threads(cfg.threads);
  GradientBundle bundle;
  bundle.init(prims);
  if (!(use_color || use_adepth || use_mdepth || use_opacity || use_uncert)) return bundle;

  const std::vector<PrimCache> cache = project_all(prims, pose, k, cfg, threads);

  // Phase 1: per-pixel adjoints accumulated into per-tile private buffers.
  const int ts = cfg.tile_size;
  const int tiles_x = (w + ts - 1) / ts;
  const int tiles_y = (h + ts - 1) / ts;
  const size_t n_tiles = static_cast<size_t>(tiles_x) * tiles_y;
  std::vector<TileGrads> tiles(n_tiles);

  parallel_for(n_tiles, threads, [&](size_t lo, size_t hi) {
    std::vector<int32_t> slot_of(prims.size(), -1);  // reset after every tile
    for (size_t t = lo; t < hi; ++t) {
      TileGrads& tg = tiles[t];
      const int tx = static_cast<int>(t) % tiles_x;
      const int ty = static_cast<int>(t) / tiles_x;
      const int x1 = std::min(w, (tx + 1) * ts);
      const int y1 = std::min(h, (ty + 1) * ts);
      for (int y = ty * ts; y < y1; ++y) {
        for (int x = tx * ts; x < x1; ++x) {
          const uint32_t lo_e = rec.begin(x, y);
          const uint32_t hi_e = rec.end(x, y);
          if (lo_e == hi_e) continue;

          const Vec3 g_color = use_color ? up.d_color(x, y) : Vec3::Zero();
          const double g_adepth = use_adepth ? up.d_alpha_depth(x, y) : 0.0;
          const double g_opacity = use_opacity ? up.d_opacity(x, y) : 0.0;
          double g_mdepth = use_mdepth ? up.d_median_depth(x, y) : 0.0;
          double g_uncert = use_uncert ? up.d_uncertainty(x, y) : 0.0;

          double obs_d = 0.0;
          if (observed_depth) {
            obs_d = (*observed_depth)(x, y);
            if (!depth_sample_valid(obs_d, k)) g_uncert = 0.0;  // U was forced to zero there
          } else {
            g_uncert = 0.0;
          }
          const int32_t median_id = rec.median_prim(x, y);
          if (median_id < 0) g_mdepth = 0.0;

          if (g_color.isZero(0.0) && g_adepth == 0.0 && g_opacity == 0.0 && g_mdepth == 0.0 &&
              g_uncert == 0.0)
            continue;

          const double px = x + 0.5, py = y + 0.5;
          // Back-to-front sweep: suffix holds sum of w_k * q_k for k behind i.
          double suffix = 0.0;
          for (uint32_t e = hi_e; e-- > lo_e;) {
            const int32_t id = rec.prim[e];
            const double alpha = rec.alpha[e];
            const double t_pre = rec.transmittance[e];
            const PrimCache& c = cache[id];

            const double depth_err = c.proj.depth - obs_d;
            const double q = g_color.dot(c.color) + g_adepth * c.proj.depth + g_opacity +
                             g_uncert * depth_err * depth_err;
            const double d_alpha = t_pre * q - suffix / (1.0 - alpha);
            suffix += alpha * t_pre * q;

            int32_t slot = slot_of[id];
            if (slot < 0) {
              slot = static_cast<int32_t>(tg.ids.size());
              slot_of[id] = slot;
              tg.ids.push_back(id);
              tg.grads.emplace_back();
            }
            ScreenGrad& sg = tg.grads[slot];

            const double weight = alpha * t_pre;
            sg.d_color += weight * g_color;
            sg.d_depth += weight * (g_adepth + 2.0 * g_uncert * depth_err);
            if (id == median_id) sg.d_depth += g_mdepth;

            // alpha = min(clamp, sigma * g); the clamped branch is constant.
            const double dx = px - c.proj.mean2d.x();
            const double dy = py - c.proj.mean2d.y();
            const double rho = c.proj.conic(0, 0) * dx * dx +
                               2.0 * c.proj.conic(0, 1) * dx * dy +
                               c.proj.conic(1, 1) * dy * dy;
            const double g_val = std::exp(-0.5 * rho);
            if (c.sigma * g_val > cfg.alpha_clamp) continue;

            sg.d_sigma += d_alpha * g_val;
            const double d_g = d_alpha * c.sigma;
            const Vec2 u(c.proj.conic(0, 0) * dx + c.proj.conic(0, 1) * dy,
                         c.proj.conic(1, 0) * dx + c.proj.conic(1, 1) * dy);
            sg.d_mean2d += g_val * d_g * u;
            sg.d_cov2d += (0.5 * g_val * d_g) * (u * u.transpose());
          }
        }
      }
      for (const int32_t id : tg.ids) slot_of[id] = -1;
    }
  });

  // Deterministic reduction in tile order.
  std::vector<ScreenGrad> screen(prims.size());
  for (const TileGrads& tg : tiles) {
    for (size_t s = 0; s < tg.ids.size(); ++s) {
      ScreenGrad& dst = screen[tg.ids[s]];
      const ScreenGrad& src = tg.grads[s];
      dst.d_mean2d += src.d_mean2d;
      dst.d_cov2d += src.d_cov2d;
      dst.d_sigma += src.d_sigma;
      dst.d_color += src.d_color;
      dst.d_depth += src.d_depth;
    }
  }

  // Phase 2: geometry chain per primitive; pose pieces are summed afterwards
  // in primitive order so the result is independent of threading.
  const Mat3 w_rot = pose.rotation();
  const Vec3 cam_center = pose.center();
  std::vector<Vec6> pose_contrib(prims.size(), Vec6::Zero());

  parallel_for(prims.size(), threads, [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      const ScreenGrad& sg = screen[i];
      if (sg.zero()) continue;
      const GaussianPrimitive& p = prims[i];
      Vec6 d_pose = Vec6::Zero();

      bundle.d_mean2d[i] = sg.d_mean2d;

      const Vec3 p_cam = w_rot * p.mean + pose.translation;
      const Mat23 jac = projection_jacobian(p_cam, k);
      const Mat3 rot = p.rotation();
      const Vec3 s = p.scale();
      const Mat3 cov_world = rot * s.cwiseAbs2().asDiagonal() * rot.transpose();
      const Mat3 cov_cam = w_rot * cov_world * w_rot.transpose();

      // Screen covariance chain: cov2d = J V J^T + dilation * I.
      const Mat3 d_cov_cam = jac.transpose() * sg.d_cov2d * jac;
      const Mat23 d_jac = 2.0 * sg.d_cov2d * jac * cov_cam;

      // Jacobian entries depend on the camera-frame point.
      const double z = p_cam.z(), iz2 = 1.0 / (z * z), iz3 = iz2 / z;
      Vec3 d_p_cam = Vec3::Zero();
      d_p_cam.x() += d_jac(0, 2) * (-k.fx * iz2);
      d_p_cam.y() += d_jac(1, 2) * (-k.fy * iz2);
      d_p_cam.z() += d_jac(0, 0) * (-k.fx * iz2) + d_jac(1, 1) * (-k.fy * iz2) +
                     d_jac(0, 2) * (2.0 * k.fx * p_cam.x() * iz3) +
                     d_jac(1, 2) * (2.0 * k.fy * p_cam.y() * iz3);

      // Screen mean and blended-depth paths.
      d_p_cam += jac.transpose() * sg.d_mean2d;
      d_p_cam.z() += sg.d_depth;

      // Pose: the camera-frame point moves as x -> exp(dw) x + dt.
      d_pose.head<3>() += p_cam.cross(d_p_cam);
      d_pose.tail<3>() += d_p_cam;
      // Pose through the conjugated covariance V = W cov W^T.
      for (int j = 0; j < 3; ++j) {
        const Mat3 e = skew(Vec3::Unit(j));
        d_pose(j) += (d_cov_cam.cwiseProduct(e * cov_cam - cov_cam * e)).sum();
      }

      // World-space primitive parameters.
      Vec3 d_mean = w_rot.transpose() * d_p_cam;
      const Mat3 d_cov_world = w_rot.transpose() * d_cov_cam * w_rot;
      const Mat3 m = rot * s.asDiagonal();
      const Mat3 d_m = 2.0 * d_cov_world * m;
      const Vec3 d_s = (rot.transpose() * d_m).diagonal();
      bundle.d_log_scale[i] = d_s.cwiseProduct(s);

      const Mat3 d_rot = d_m * s.asDiagonal();
      const Vec4 qn = p.quat.normalized();
      Mat3 jq[4];
      rotation_quat_jacobians(qn, jq);
      Vec4 d_qn;
      for (int kq = 0; kq < 4; ++kq) d_qn(kq) = (d_rot.cwiseProduct(jq[kq])).sum();
      const double qlen = p.quat.norm();
      bundle.d_quat[i] = (d_qn - qn * qn.dot(d_qn)) / qlen;

      const double sig = p.opacity();
      bundle.d_opacity_logit[i] = sg.d_sigma * sig * (1.0 - sig);

      // Color through the harmonics, including the view direction.
      if (!p.sh.empty()) {
        Vec3 dir = p.mean - cam_center;
        const double len = dir.norm();
        if (len > 1e-12) {
          dir /= len;
          Vec3 d_dir = Vec3::Zero();
          eval_sh_color_backward(p.sh, dir, sg.d_color, bundle.d_sh[i], d_dir);
          const Vec3 through = (d_dir - dir * dir.dot(d_dir)) / len;
          d_mean += through;
          d_pose.tail<3>() += w_rot * through;  // camera center is -W^T t
        } else {
          Vec3 d_dir = Vec3::Zero();
          eval_sh_color_backward(p.sh, Vec3(0, 0, 1), sg.d_color, bundle.d_sh[i], d_dir);
        }
      }

      bundle.d_mean[i] = d_mean;
      pose_contrib[i] = d_pose;
    }
  });

  for (const Vec6& c : pose_contrib) bundle.d_pose += c;
  return bundle;
}

}  // namespace gsf
