#include "gsfield/io/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace gsf {

ImageRGB load_color_png(const std::string& path) {
  const cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) throw std::runtime_error("cannot read color image: " + path);
  ImageRGB out(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x)
      out(x, y) = Vec3(row[x][2] / 255.0, row[x][1] / 255.0, row[x][0] / 255.0);
  }
  return out;
}

void save_color_png(const std::string& path, const ImageRGB& image) {
  if (image.empty()) throw std::invalid_argument("refusing to save an empty color image");
  cv::Mat bgr(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      const Vec3 c = image(x, y).cwiseMax(0.0).cwiseMin(1.0);
      row[x] = cv::Vec3b(static_cast<uchar>(std::lround(c(2) * 255.0)),
                         static_cast<uchar>(std::lround(c(1) * 255.0)),
                         static_cast<uchar>(std::lround(c(0) * 255.0)));
    }
  }
  if (!cv::imwrite(path, bgr)) throw std::runtime_error("cannot write color image: " + path);
}

ImageD load_depth_png(const std::string& path, double depth_scale, double near_plane,
                      double far_plane) {
  const cv::Mat raw = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw std::runtime_error("cannot read depth image: " + path);
  if (raw.type() != CV_16UC1)
    throw std::runtime_error("depth image is not 16-bit single-channel: " + path);
  ImageD out(raw.cols, raw.rows, 0.0);
  for (int y = 0; y < raw.rows; ++y) {
    const uint16_t* row = raw.ptr<uint16_t>(y);
    for (int x = 0; x < raw.cols; ++x) {
      const double meters = row[x] / depth_scale;
      if (row[x] != 0 && meters > near_plane && meters < far_plane) out(x, y) = meters;
    }
  }
  return out;
}

void save_depth_png(const std::string& path, const ImageD& depth_meters, double depth_scale) {
  if (depth_meters.empty()) throw std::invalid_argument("refusing to save an empty depth image");
  cv::Mat raw(depth_meters.height(), depth_meters.width(), CV_16UC1);
  for (int y = 0; y < depth_meters.height(); ++y) {
    uint16_t* row = raw.ptr<uint16_t>(y);
    for (int x = 0; x < depth_meters.width(); ++x) {
      const double units = depth_meters(x, y) * depth_scale;
      row[x] = static_cast<uint16_t>(std::clamp(std::lround(units), 0L, 65535L));
    }
  }
  if (!cv::imwrite(path, raw)) throw std::runtime_error("cannot write depth image: " + path);
}

}  // namespace gsf
