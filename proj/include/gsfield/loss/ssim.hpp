#pragma once

#include "gsfield/core/image.hpp"

namespace gsf {

/// Mean structural similarity between two RGB images in [0,1] dynamic range:
/// 11x11 Gaussian window (sigma 1.5), stabilizers C1=0.01^2, C2=0.03^2,
/// averaged over pixels and channels. Window weights renormalize at borders.
/// Images smaller than the window fall back to global statistics.
double ssim(const ImageRGB& x, const ImageRGB& y);

/// Same value; also writes d(mean ssim)/dx into d_x (resized here).
double ssim_with_gradient(const ImageRGB& x, const ImageRGB& y, ImageRGB& d_x);

}  // namespace gsf
