#pragma once

#include <string>

#include "gsfield/core/image.hpp"

namespace gsf {

/// 8-bit color PNG (or any format the codec recognizes) -> [0,1] RGB.
/// Throws std::runtime_error naming the path on failure.
ImageRGB load_color_png(const std::string& path);
void save_color_png(const std::string& path, const ImageRGB& image);

/// 16-bit single-channel PNG storing depth as value/depth_scale meters.
/// Zero stays invalid, and decoded values outside (near, far) become invalid.
ImageD load_depth_png(const std::string& path, double depth_scale, double near_plane,
                      double far_plane);
void save_depth_png(const std::string& path, const ImageD& depth_meters, double depth_scale);

}  // namespace gsf
