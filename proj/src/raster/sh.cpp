#include "gsfield/raster/sh.hpp"

#include <array>
#include <stdexcept>

namespace gsf {

namespace {
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr std::array<double, 5> kC2 = {1.0925484305920792, -1.0925484305920792,
                                       0.31539156525252005, -1.0925484305920792,
                                       0.5462742152960396};
constexpr std::array<double, 7> kC3 = {-0.5900435899266435, 2.890611442640554,
                                       -0.4570457994644658, 0.3731763325901154,
                                       -0.4570457994644658, 1.445305721320277,
                                       -0.5900435899266435};

/// Basis values for degree <= 3; out must hold 16 entries, only the first
/// (degree+1)^2 are written.
void basis_values(int degree, double x, double y, double z, double* b) {
  b[0] = kC0;
  if (degree < 1) return;
  b[1] = -kC1 * y;
  b[2] = kC1 * z;
  b[3] = -kC1 * x;
  if (degree < 2) return;
  const double xx = x * x, yy = y * y, zz = z * z;
  b[4] = kC2[0] * x * y;
  b[5] = kC2[1] * y * z;
  b[6] = kC2[2] * (2.0 * zz - xx - yy);
  b[7] = kC2[3] * x * z;
  b[8] = kC2[4] * (xx - yy);
  if (degree < 3) return;
  b[9] = kC3[0] * y * (3.0 * xx - yy);
  b[10] = kC3[1] * x * y * z;
  b[11] = kC3[2] * y * (4.0 * zz - xx - yy);
  b[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
  b[13] = kC3[4] * x * (4.0 * zz - xx - yy);
  b[14] = kC3[5] * z * (xx - yy);
  b[15] = kC3[6] * x * (xx - 3.0 * yy);
}

/// Direction-gradients of the same bases; g must hold 16 Vec3 slots.
void basis_gradients(int degree, double x, double y, double z, Vec3* g) {
  g[0].setZero();
  if (degree < 1) return;
  g[1] = Vec3(0.0, -kC1, 0.0);
  g[2] = Vec3(0.0, 0.0, kC1);
  g[3] = Vec3(-kC1, 0.0, 0.0);
  if (degree < 2) return;
  const double xx = x * x, yy = y * y, zz = z * z;
  g[4] = kC2[0] * Vec3(y, x, 0.0);
  g[5] = kC2[1] * Vec3(0.0, z, y);
  g[6] = kC2[2] * Vec3(-2.0 * x, -2.0 * y, 4.0 * z);
  g[7] = kC2[3] * Vec3(z, 0.0, x);
  g[8] = kC2[4] * Vec3(2.0 * x, -2.0 * y, 0.0);
  if (degree < 3) return;
  g[9] = kC3[0] * Vec3(6.0 * x * y, 3.0 * xx - 3.0 * yy, 0.0);
  g[10] = kC3[1] * Vec3(y * z, x * z, x * y);
  g[11] = kC3[2] * Vec3(-2.0 * x * y, 4.0 * zz - xx - 3.0 * yy, 8.0 * y * z);
  g[12] = kC3[3] * Vec3(-6.0 * x * z, -6.0 * y * z, 6.0 * zz - 3.0 * xx - 3.0 * yy);
  g[13] = kC3[4] * Vec3(4.0 * zz - 3.0 * xx - yy, -2.0 * x * y, 8.0 * x * z);
  g[14] = kC3[5] * Vec3(2.0 * x * z, -2.0 * y * z, xx - yy);
  g[15] = kC3[6] * Vec3(3.0 * xx - 3.0 * yy, -6.0 * x * y, 0.0);
}
}  // namespace

int sh_degree_from_count(int count) {
  switch (count) {
    case 1: return 0;
    case 4: return 1;
    case 9: return 2;
    case 16: return 3;
    default: throw std::invalid_argument("sh coefficient count must be 1, 4, 9 or 16");
  }
}

Vec3 eval_sh_color(const std::vector<Vec3>& sh, const Vec3& dir) {
  const int degree = sh_degree_from_count(static_cast<int>(sh.size()));
  double b[16];
  basis_values(degree, dir.x(), dir.y(), dir.z(), b);
  Vec3 c = Vec3::Constant(0.5);
  for (size_t i = 0; i < sh.size(); ++i) c += b[i] * sh[i];
  return c.cwiseMax(0.0);
}

void eval_sh_color_backward(const std::vector<Vec3>& sh, const Vec3& dir, const Vec3& d_color,
                            std::vector<Vec3>& d_sh, Vec3& d_dir) {
  const int degree = sh_degree_from_count(static_cast<int>(sh.size()));
  if (d_sh.size() != sh.size())
    throw std::invalid_argument("eval_sh_color_backward: d_sh size mismatch");
  double b[16];
  basis_values(degree, dir.x(), dir.y(), dir.z(), b);
  Vec3 raw = Vec3::Constant(0.5);
  for (size_t i = 0; i < sh.size(); ++i) raw += b[i] * sh[i];
  Vec3 masked = d_color;
  for (int c = 0; c < 3; ++c)
    if (raw(c) < 0.0) masked(c) = 0.0;

  for (size_t i = 0; i < sh.size(); ++i) d_sh[i] += b[i] * masked;

  if (degree >= 1) {
    Vec3 g[16];
    basis_gradients(degree, dir.x(), dir.y(), dir.z(), g);
    for (size_t i = 1; i < sh.size(); ++i) d_dir += g[i] * masked.dot(sh[i]);
  }
}

}  // namespace gsf
