#include "gsfield/raster/output.hpp"

#include <cmath>
#include <stdexcept>

#include "gsfield/geometry/primitive.hpp"

namespace gsf {

void RenderOutput::init(int w, int h) {
  width = w;
  height = h;
  color.resize(w, h, Vec3::Zero());
  alpha_depth.resize(w, h, 0.0);
  median_depth.resize(w, h, 0.0);
  median_valid.resize(w, h, 0);
  opacity.resize(w, h, 0.0);
  uncertainty.resize(w, h, 0.0);
  has_uncertainty = false;
  final_transmittance.resize(w, h, 1.0);
  per_pixel_count.resize(w, h, 0);
}

void GradientBundle::init(const std::vector<GaussianPrimitive>& primitives) {
  const size_t n = primitives.size();
  d_mean.assign(n, Vec3::Zero());
  d_log_scale.assign(n, Vec3::Zero());
  d_quat.assign(n, Vec4::Zero());
  d_opacity_logit.assign(n, 0.0);
  d_sh.resize(n);
  for (size_t i = 0; i < n; ++i) d_sh[i].assign(primitives[i].sh.size(), Vec3::Zero());
  d_pose.setZero();
  d_mean2d.assign(n, Vec2::Zero());
}

void GradientBundle::add(const GradientBundle& other) {
  if (other.d_mean.size() != d_mean.size())
    throw std::invalid_argument("GradientBundle::add: size mismatch");
  for (size_t i = 0; i < d_mean.size(); ++i) {
    d_mean[i] += other.d_mean[i];
    d_log_scale[i] += other.d_log_scale[i];
    d_quat[i] += other.d_quat[i];
    d_opacity_logit[i] += other.d_opacity_logit[i];
    d_mean2d[i] += other.d_mean2d[i];
    for (size_t j = 0; j < d_sh[i].size(); ++j) d_sh[i][j] += other.d_sh[i][j];
  }
  d_pose += other.d_pose;
}

void GradientBundle::scale(double s) {
  for (size_t i = 0; i < d_mean.size(); ++i) {
    d_mean[i] *= s;
    d_log_scale[i] *= s;
    d_quat[i] *= s;
    d_opacity_logit[i] *= s;
    d_mean2d[i] *= s;
    for (auto& g : d_sh[i]) g *= s;
  }
  d_pose *= s;
}

bool GradientBundle::all_finite() const {
  if (!d_pose.allFinite()) return false;
  for (size_t i = 0; i < d_mean.size(); ++i) {
    if (!d_mean[i].allFinite() || !d_log_scale[i].allFinite() || !d_quat[i].allFinite() ||
        !std::isfinite(d_opacity_logit[i]) || !d_mean2d[i].allFinite())
      return false;
    for (const auto& g : d_sh[i])
      if (!g.allFinite()) return false;
  }
  return true;
}

}  // namespace gsf
