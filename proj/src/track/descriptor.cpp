#include "gsfield/track/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gsf {

VecX compute_descriptor(const ImageRGB& rgb) {
  const int w = rgb.width(), h = rgb.height();
  if (w == 0 || h == 0) throw std::invalid_argument("descriptor: empty image");
  VecX d = VecX::Zero(kDescriptorLength);

  // 8x8 grid of mean luminance.
  for (int gy = 0; gy < 8; ++gy)
    for (int gx = 0; gx < 8; ++gx) {
      const int x0 = w * gx / 8, x1 = std::max(w * (gx + 1) / 8, x0 + 1);
      const int y0 = h * gy / 8, y1 = std::max(h * (gy + 1) / 8, y0 + 1);
      double acc = 0.0;
      int count = 0;
      for (int y = y0; y < y1 && y < h; ++y)
        for (int x = x0; x < x1 && x < w; ++x) {
          const Vec3& px = rgb(x, y);
          acc += 0.299 * px.x() + 0.587 * px.y() + 0.114 * px.z();
          ++count;
        }
      if (count > 0) d(gy * 8 + gx) = acc / count;
    }

  // Per-channel 16-bin color histograms over the full frame.
  const double inv_n = 1.0 / static_cast<double>(rgb.size());
  for (const Vec3& px : rgb.data())
    for (int c = 0; c < 3; ++c) {
      const double v = std::clamp(px(c), 0.0, 1.0);
      const int bin = std::min(15, static_cast<int>(v * 16.0));
      d(64 + c * 16 + bin) += inv_n;
    }

  const double norm = d.norm();
  if (norm > 0.0) d /= norm;
  return d;
}

double cosine_similarity(const VecX& a, const VecX& b) {
  if (a.size() != b.size()) throw std::invalid_argument("descriptor lengths differ");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace gsf
