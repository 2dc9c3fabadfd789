#include "gsfield/loss/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "gsfield/core/hash.hpp"
#include "gsfield/loss/ssim.hpp"

namespace gsf {

namespace {

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_same_size(int w, int h, int ow, int oh, const char* what) {
  if (w != ow || h != oh)
    throw std::invalid_argument(std::string("loss: ") + what + " dimensions mismatch");
}

int mask_count(const ImageMask& m) {
  int c = 0;
  for (const uint8_t v : m.data()) c += v;
  return c;
}

void fold_mask(uint64_t* fp, const ImageMask& m) {
  if (!fp) return;
  for (const uint8_t v : m.data()) fingerprint_fold(*fp, v);
}

}  // namespace

LossWeights LossWeights::indoor_synthetic() { return LossWeights{}; }

LossWeights LossWeights::handheld_real() {
  LossWeights w;
  w.w_color = 1.0;
  w.w_ssim = 0.1;
  w.w_geo = 0.8;
  w.w_align = 0.5;
  w.w_iso = 0.1;
  w.w_var = 0.5;
  w.t_color = 1.0;
  w.t_geo = 0.6;
  return w;
}

void LossWeights::validate() const {
  const double all[] = {w_color, w_ssim, w_geo, w_align, w_iso, w_var, t_color, t_geo};
  for (const double v : all)
    if (!(v >= 0.0)) throw std::invalid_argument("loss weights must be non-negative");
  if (!(iso_epsilon >= 1.0)) throw std::invalid_argument("iso epsilon must be >= 1");
  if (!(opacity_floor >= 0.0 && opacity_floor <= 1.0))
    throw std::invalid_argument("opacity floor must lie in [0,1]");
}

double color_loss(const ImageRGB& rendered, const ImageRGB& target, const ImageMask* mask,
                  bool normalize_by_valid, bool* empty_warning) {
  check_same_size(rendered.width(), rendered.height(), target.width(), target.height(), "color");
  int valid = 0;
  double sum = 0.0;
  for (size_t i = 0; i < rendered.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    ++valid;
    sum += (rendered[i] - target[i]).cwiseAbs().sum();
  }
  if (valid == 0) {
    if (empty_warning) *empty_warning = true;
    return 0.0;
  }
  const double denom = 3.0 * (normalize_by_valid ? valid : static_cast<int>(rendered.size()));
  return sum / denom;
}

double ssim_loss(const ImageRGB& rendered, const ImageRGB& target) {
  return 1.0 - ssim(rendered, target);
}

double geo_loss(const ImageD& rendered_depth, const ImageD& observed_depth, const ImageMask& mask,
                bool normalize_by_valid, bool* empty_warning) {
  check_same_size(rendered_depth.width(), rendered_depth.height(), observed_depth.width(),
                  observed_depth.height(), "depth");
  int valid = 0;
  double sum = 0.0;
  for (size_t i = 0; i < rendered_depth.size(); ++i) {
    if (!mask[i]) continue;
    ++valid;
    sum += std::abs(rendered_depth[i] - observed_depth[i]);
  }
  if (valid == 0) {
    if (empty_warning) *empty_warning = true;
    return 0.0;
  }
  return sum / (normalize_by_valid ? valid : static_cast<int>(rendered_depth.size()));
}

double align_loss(const ImageD& alpha_depth, const ImageD& median_depth, const ImageMask& mask,
                  bool normalize_by_valid, bool* empty_warning) {
  return geo_loss(alpha_depth, median_depth, mask, normalize_by_valid, empty_warning);
}

double iso_loss(const std::vector<GaussianPrimitive>& prims, const std::vector<uint8_t>* visible,
                double eps) {
  int count = 0;
  double sum = 0.0;
  for (size_t i = 0; i < prims.size(); ++i) {
    if (visible && !(*visible)[i]) continue;
    ++count;
    const Vec3 s = prims[i].scale();
    int a = 0, b = 0;
    s.maxCoeff(&a);
    s.minCoeff(&b);
    const double ratio = s(a) / s(b);
    sum += std::max(ratio, eps) - eps;
  }
  return count == 0 ? 0.0 : sum / count;
}

double var_loss(const ImageD& uncertainty, const ImageMask& mask, bool normalize_by_valid,
                bool* empty_warning) {
  int valid = 0;
  double sum = 0.0;
  for (size_t i = 0; i < uncertainty.size(); ++i) {
    if (!mask[i]) continue;
    ++valid;
    sum += std::abs(uncertainty[i]);
  }
  if (valid == 0) {
    if (empty_warning) *empty_warning = true;
    return 0.0;
  }
  return sum / (normalize_by_valid ? valid : static_cast<int>(uncertainty.size()));
}

ImageMask opacity_floor_mask(const RenderOutput& out, double floor) {
  ImageMask m(out.width, out.height, 0);
  for (size_t i = 0; i < m.size(); ++i) m[i] = out.opacity[i] >= floor ? 1 : 0;
  return m;
}

ImageMask sensor_valid_mask(const ImageD& observed, const CameraIntrinsics& k) {
  ImageMask m(observed.width(), observed.height(), 0);
  for (size_t i = 0; i < m.size(); ++i) {
    const double d = observed[i];
    m[i] = (std::isfinite(d) && d > k.near_plane && d < k.far_plane) ? 1 : 0;
  }
  return m;
}

ImageMask mask_and(const ImageMask& a, const ImageMask& b) {
  ImageMask m(a.width(), a.height(), 0);
  for (size_t i = 0; i < m.size(); ++i) m[i] = (a[i] && b[i]) ? 1 : 0;
  return m;
}

MappingLossResult evaluate_mapping_loss(const std::vector<GaussianPrimitive>& prims,
                                        const RenderResult& rendered, const ImageRGB& target_rgb,
                                        const ImageD& observed_depth, const CameraIntrinsics& k,
                                        const LossWeights& w, bool want_gradients,
                                        uint64_t* fp) {
  w.validate();
  const RenderOutput& out = rendered.out;
  check_same_size(out.width, out.height, target_rgb.width(), target_rgb.height(), "target rgb");
  check_same_size(out.width, out.height, observed_depth.width(), observed_depth.height(),
                  "observed depth");
  const int width = out.width, height = out.height;
  const size_t n = static_cast<size_t>(width) * height;

  MappingLossResult r;
  const ImageMask op_mask = opacity_floor_mask(out, w.opacity_floor);
  const ImageMask sv_mask = sensor_valid_mask(observed_depth, k);
  const ImageMask geo_mask = mask_and(op_mask, sv_mask);
  ImageMask align_mask(width, height, 0);
  for (size_t i = 0; i < n; ++i) align_mask[i] = (op_mask[i] && out.median_valid[i]) ? 1 : 0;
  ImageMask var_mask(width, height, 0);
  if (out.has_uncertainty) var_mask = geo_mask;

  fold_mask(fp, op_mask);
  fold_mask(fp, align_mask);

  const int hw = static_cast<int>(n);
  const int m_geo = w.normalize_by_valid ? mask_count(geo_mask) : hw;
  const int m_align = w.normalize_by_valid ? mask_count(align_mask) : hw;
  const int m_var = w.normalize_by_valid ? mask_count(var_mask) : hw;

  bool warn = false;
  r.color = color_loss(out.color, target_rgb, nullptr, w.normalize_by_valid, &warn);
  r.geo = geo_loss(out.alpha_depth, observed_depth, geo_mask, w.normalize_by_valid, &warn);
  r.align = align_loss(out.alpha_depth, out.median_depth, align_mask, w.normalize_by_valid, &warn);
  r.var = out.has_uncertainty
              ? var_loss(out.uncertainty, var_mask, w.normalize_by_valid, &warn)
              : (warn = true, 0.0);
  if (w.w_ssim > 0.0 && !want_gradients) r.ssim = ssim_loss(out.color, target_rgb);

  // Iso term with argmin/argmax bookkeeping for gradients and fingerprints.
  int iso_count = 0;
  double iso_sum = 0.0;
  std::vector<int> iso_hi(prims.size(), -1), iso_lo(prims.size(), -1);
  std::vector<double> iso_ratio(prims.size(), 0.0);
  for (size_t i = 0; i < prims.size(); ++i) {
    if (!rendered.record.visible[i]) continue;
    ++iso_count;
    const Vec3 s = prims[i].scale();
    int a = 0, b = 0;
    s.maxCoeff(&a);
    s.minCoeff(&b);
    iso_hi[i] = a;
    iso_lo[i] = b;
    iso_ratio[i] = s(a) / s(b);
    iso_sum += std::max(iso_ratio[i], w.iso_epsilon) - w.iso_epsilon;
    if (fp) {
      fingerprint_fold(*fp, static_cast<uint64_t>(a * 4 + b));
      fingerprint_fold(*fp, iso_ratio[i] > w.iso_epsilon ? 1 : 0);
    }
  }
  r.iso = iso_count == 0 ? 0.0 : iso_sum / iso_count;

  ImageRGB d_ssim;
  if (w.w_ssim > 0.0 && want_gradients) {
    r.ssim = 1.0 - ssim_with_gradient(out.color, target_rgb, d_ssim);
  }

  r.any_empty_mask = warn;
  r.total = w.w_color * r.color + w.w_ssim * r.ssim + w.w_geo * r.geo + w.w_align * r.align +
            w.w_iso * r.iso + w.w_var * r.var;

  if (fp) {
    for (size_t i = 0; i < n; ++i) {
      const Vec3 cr = out.color[i] - target_rgb[i];
      uint64_t bits = 0;
      for (int c = 0; c < 3; ++c) bits = bits * 3 + static_cast<uint64_t>(sgn(cr(c)) + 1);
      if (geo_mask[i]) bits = bits * 3 + static_cast<uint64_t>(sgn(out.alpha_depth[i] - observed_depth[i]) + 1);
      if (align_mask[i]) bits = bits * 3 + static_cast<uint64_t>(sgn(out.alpha_depth[i] - out.median_depth[i]) + 1);
      fingerprint_fold(*fp, bits);
    }
  }

  if (!want_gradients) return r;

  UpstreamGradients& up = r.upstream;
  const double c_norm = 3.0 * hw;  // color is unmasked, so both normalizations coincide
  if (w.w_color > 0.0 || w.w_ssim > 0.0) up.d_color.resize(width, height, Vec3::Zero());
  if (w.w_geo > 0.0 || w.w_align > 0.0) up.d_alpha_depth.resize(width, height, 0.0);
  if (w.w_align > 0.0) up.d_median_depth.resize(width, height, 0.0);
  if (w.w_var > 0.0 && out.has_uncertainty && m_var > 0)
    up.d_uncertainty.resize(width, height, 0.0);

  for (size_t i = 0; i < n; ++i) {
    if (!up.d_color.empty()) {
      Vec3 g = Vec3::Zero();
      if (w.w_color > 0.0) {
        const Vec3 cr = out.color[i] - target_rgb[i];
        g += (w.w_color / c_norm) * Vec3(sgn(cr(0)), sgn(cr(1)), sgn(cr(2)));
      }
      if (w.w_ssim > 0.0) g -= w.w_ssim * d_ssim[i];
      up.d_color[i] = g;
    }
    if (!up.d_alpha_depth.empty()) {
      double g = 0.0;
      if (w.w_geo > 0.0 && geo_mask[i] && m_geo > 0)
        g += w.w_geo * sgn(out.alpha_depth[i] - observed_depth[i]) / m_geo;
      if (w.w_align > 0.0 && align_mask[i] && m_align > 0) {
        const double s = sgn(out.alpha_depth[i] - out.median_depth[i]);
        g += w.w_align * s / m_align;
        up.d_median_depth[i] = -w.w_align * s / m_align;
      }
      up.d_alpha_depth[i] = g;
    }
    if (!up.d_uncertainty.empty() && var_mask[i]) up.d_uncertainty[i] = w.w_var / m_var;
  }

  if (w.w_iso > 0.0 && iso_count > 0) {
    r.d_log_scale_direct.assign(prims.size(), Vec3::Zero());
    for (size_t i = 0; i < prims.size(); ++i) {
      if (iso_hi[i] < 0 || iso_ratio[i] <= w.iso_epsilon) continue;
      const double g = w.w_iso * iso_ratio[i] / iso_count;
      r.d_log_scale_direct[i](iso_hi[i]) += g;
      r.d_log_scale_direct[i](iso_lo[i]) -= g;
    }
  }
  return r;
}

TrackingLossResult evaluate_tracking_loss(const RenderResult& rendered, const ImageRGB& target_rgb,
                                          const ImageD& observed_depth, const CameraIntrinsics& k,
                                          const LossWeights& w, bool want_gradients,
                                          uint64_t* fp) {
  w.validate();
  const RenderOutput& out = rendered.out;
  check_same_size(out.width, out.height, target_rgb.width(), target_rgb.height(), "target rgb");
  check_same_size(out.width, out.height, observed_depth.width(), observed_depth.height(),
                  "observed depth");
  const int width = out.width, height = out.height;
  const size_t n = static_cast<size_t>(width) * height;

  TrackingLossResult r;
  const ImageMask op_mask = opacity_floor_mask(out, w.opacity_floor);
  const ImageMask geo_mask = mask_and(op_mask, sensor_valid_mask(observed_depth, k));
  r.valid_color = mask_count(op_mask);
  r.valid_geo = mask_count(geo_mask);
  fold_mask(fp, op_mask);
  fold_mask(fp, geo_mask);

  const int hw = static_cast<int>(n);
  const int m_color = w.normalize_by_valid ? r.valid_color : hw;
  const int m_geo = w.normalize_by_valid ? r.valid_geo : hw;

  r.color = color_loss(out.color, target_rgb, &op_mask, w.normalize_by_valid);
  r.geo = geo_loss(out.alpha_depth, observed_depth, geo_mask, w.normalize_by_valid);
  r.total = w.t_color * r.color + w.t_geo * r.geo;

  if (fp) {
    for (size_t i = 0; i < n; ++i) {
      uint64_t bits = 0;
      if (op_mask[i]) {
        const Vec3 cr = out.color[i] - target_rgb[i];
        for (int c = 0; c < 3; ++c) bits = bits * 3 + static_cast<uint64_t>(sgn(cr(c)) + 1);
      }
      if (geo_mask[i])
        bits = bits * 3 + static_cast<uint64_t>(sgn(out.alpha_depth[i] - observed_depth[i]) + 1);
      fingerprint_fold(*fp, bits);
    }
  }

  if (!want_gradients) return r;
  UpstreamGradients& up = r.upstream;
  if (w.t_color > 0.0 && m_color > 0) up.d_color.resize(width, height, Vec3::Zero());
  if (w.t_geo > 0.0 && m_geo > 0) up.d_alpha_depth.resize(width, height, 0.0);
  for (size_t i = 0; i < n; ++i) {
    if (!up.d_color.empty() && op_mask[i]) {
      const Vec3 cr = out.color[i] - target_rgb[i];
      up.d_color[i] =
          (w.t_color / (3.0 * m_color)) * Vec3(sgn(cr(0)), sgn(cr(1)), sgn(cr(2)));
    }
    if (!up.d_alpha_depth.empty() && geo_mask[i])
      up.d_alpha_depth[i] = w.t_geo * sgn(out.alpha_depth[i] - observed_depth[i]) / m_geo;
  }
  return r;
}

}  // namespace gsf
