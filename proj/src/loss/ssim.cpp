#include "gsfield/loss/ssim.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace gsf {

namespace {

constexpr int kRadius = 5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, 2 * kRadius + 1>& window() {
  static const auto w = [] {
    std::array<double, 2 * kRadius + 1> a{};
    for (int i = 0; i <= 2 * kRadius; ++i) {
      const double d = i - kRadius;
      a[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    }
    return a;
  }();
  return w;
}

std::vector<double> axis_norms(int n) {
  const auto& w = window();
  std::vector<double> z(n, 0.0);
  for (int p = 0; p < n; ++p)
    for (int o = -kRadius; o <= kRadius; ++o)
      if (p + o >= 0 && p + o < n) z[p] += w[o + kRadius];
  return z;
}

/// Border-renormalized separable blur: out(p) = sum w * in / Z(p) per axis.
ImageRGB blur(const ImageRGB& in, const std::vector<double>& zx, const std::vector<double>& zy) {
  const int w = in.width(), h = in.height();
  const auto& k = window();
  ImageRGB tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Vec3 acc = Vec3::Zero();
      for (int o = -kRadius; o <= kRadius; ++o)
        if (x + o >= 0 && x + o < w) acc += k[o + kRadius] * in(x + o, y);
      tmp(x, y) = acc / zx[x];
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Vec3 acc = Vec3::Zero();
      for (int o = -kRadius; o <= kRadius; ++o)
        if (y + o >= 0 && y + o < h) acc += k[o + kRadius] * tmp(x, y + o);
      out(x, y) = acc / zy[y];
    }
  return out;
}

/// Adjoint of blur: divide by the output-position norm, then run the raw
/// stencil, axis order reversed.
ImageRGB blur_adjoint(const ImageRGB& u, const std::vector<double>& zx,
                      const std::vector<double>& zy) {
  const int w = u.width(), h = u.height();
  const auto& k = window();
  ImageRGB tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Vec3 acc = Vec3::Zero();
      for (int o = -kRadius; o <= kRadius; ++o)
        if (y + o >= 0 && y + o < h) acc += k[o + kRadius] * u(x, y + o) / zy[y + o];
      tmp(x, y) = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Vec3 acc = Vec3::Zero();
      for (int o = -kRadius; o <= kRadius; ++o)
        if (x + o >= 0 && x + o < w) acc += k[o + kRadius] * tmp(x + o, y) / zx[x + o];
      out(x, y) = acc;
    }
  return out;
}

struct Partials {
  Vec3 d_mu_x, d_ex2, d_exy;  // per-channel partials of S at one pixel
};

Vec3 ssim_value(const Vec3& mu_x, const Vec3& mu_y, const Vec3& ex2, const Vec3& ey2,
                const Vec3& exy, Partials* part) {
  Vec3 s;
  for (int c = 0; c < 3; ++c) {
    const double mx = mu_x(c), my = mu_y(c);
    const double a1 = 2.0 * mx * my + kC1;
    const double a2 = 2.0 * (exy(c) - mx * my) + kC2;
    const double b1 = mx * mx + my * my + kC1;
    const double b2 = (ex2(c) - mx * mx) + (ey2(c) - my * my) + kC2;
    const double denom = b1 * b2;
    s(c) = a1 * a2 / denom;
    if (part) {
      const double d_a1 = a2 / denom;
      const double d_a2 = a1 / denom;
      const double d_b1 = -s(c) / b1;
      const double d_b2 = -s(c) / b2;
      part->d_mu_x(c) = 2.0 * my * d_a1 - 2.0 * my * d_a2 + 2.0 * mx * d_b1 - 2.0 * mx * d_b2;
      part->d_ex2(c) = d_b2;
      part->d_exy(c) = 2.0 * d_a2;
    }
  }
  return s;
}

double ssim_impl(const ImageRGB& x, const ImageRGB& y, ImageRGB* d_x) {
  if (x.width() != y.width() || x.height() != y.height())
    throw std::invalid_argument("ssim: image dimensions differ");
  const int w = x.width(), h = x.height();
  if (w == 0 || h == 0) throw std::invalid_argument("ssim: empty image");
  const size_t n = x.size();

  if (w < 2 * kRadius + 1 || h < 2 * kRadius + 1) {
    // Global-statistics fallback for images smaller than the window.
    Vec3 mu_x = Vec3::Zero(), mu_y = Vec3::Zero(), ex2 = Vec3::Zero(), ey2 = Vec3::Zero(),
         exy = Vec3::Zero();
    for (size_t i = 0; i < n; ++i) {
      mu_x += x[i];
      mu_y += y[i];
      ex2 += x[i].cwiseProduct(x[i]);
      ey2 += y[i].cwiseProduct(y[i]);
      exy += x[i].cwiseProduct(y[i]);
    }
    const double inv = 1.0 / double(n);
    mu_x *= inv;
    mu_y *= inv;
    ex2 *= inv;
    ey2 *= inv;
    exy *= inv;
    Partials part;
    const Vec3 s = ssim_value(mu_x, mu_y, ex2, ey2, exy, d_x ? &part : nullptr);
    if (d_x) {
      d_x->resize(w, h, Vec3::Zero());
      for (size_t i = 0; i < n; ++i) {
        Vec3 g = part.d_mu_x + 2.0 * part.d_ex2.cwiseProduct(x[i]) + part.d_exy.cwiseProduct(y[i]);
        (*d_x)[i] = g * (inv / 3.0);
      }
    }
    return s.mean();
  }

  const std::vector<double> zx = axis_norms(w), zy = axis_norms(h);
  const ImageRGB mu_x = blur(x, zx, zy);
  const ImageRGB mu_y = blur(y, zx, zy);
  ImageRGB xx(w, h), yy(w, h), xy(w, h);
  for (size_t i = 0; i < n; ++i) {
    xx[i] = x[i].cwiseProduct(x[i]);
    yy[i] = y[i].cwiseProduct(y[i]);
    xy[i] = x[i].cwiseProduct(y[i]);
  }
  const ImageRGB ex2 = blur(xx, zx, zy);
  const ImageRGB ey2 = blur(yy, zx, zy);
  const ImageRGB exy = blur(xy, zx, zy);

  double total = 0.0;
  ImageRGB u_mu, u_ex2, u_exy;
  if (d_x) {
    u_mu.resize(w, h, Vec3::Zero());
    u_ex2.resize(w, h, Vec3::Zero());
    u_exy.resize(w, h, Vec3::Zero());
  }
  const double weight = 1.0 / (3.0 * double(n));
  for (size_t i = 0; i < n; ++i) {
    Partials part;
    const Vec3 s = ssim_value(mu_x[i], mu_y[i], ex2[i], ey2[i], exy[i], d_x ? &part : nullptr);
    total += s.sum();
    if (d_x) {
      u_mu[i] = part.d_mu_x * weight;
      u_ex2[i] = part.d_ex2 * weight;
      u_exy[i] = part.d_exy * weight;
    }
  }

  if (d_x) {
    const ImageRGB a_mu = blur_adjoint(u_mu, zx, zy);
    const ImageRGB a_ex2 = blur_adjoint(u_ex2, zx, zy);
    const ImageRGB a_exy = blur_adjoint(u_exy, zx, zy);
    d_x->resize(w, h, Vec3::Zero());
    for (size_t i = 0; i < n; ++i)
      (*d_x)[i] = a_mu[i] + 2.0 * a_ex2[i].cwiseProduct(x[i]) + a_exy[i].cwiseProduct(y[i]);
  }
  return total * weight;
}

}  // namespace

double ssim(const ImageRGB& x, const ImageRGB& y) { return ssim_impl(x, y, nullptr); }

double ssim_with_gradient(const ImageRGB& x, const ImageRGB& y, ImageRGB& d_x) {
  return ssim_impl(x, y, &d_x);
}

}  // namespace gsf
