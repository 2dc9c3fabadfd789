#pragma once

#include <cassert>
#include <vector>

#include "gsfield/core/types.hpp"

namespace gsf {

/// Row-major image container. Index order is (x, y) with y*width + x storage.
template <class T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  size_t size() const { return data_.size(); }

  T& operator()(int x, int y) {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return data_[static_cast<size_t>(y) * width_ + x];
  }
  const T& operator()(int x, int y) const {
    assert(x >= 0 && x < width_ && y >= 0 && y < height_);
    return data_[static_cast<size_t>(y) * width_ + x];
  }
  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }
  void resize(int width, int height, const T& fill = T{}) {
    width_ = width;
    height_ = height;
    data_.assign(static_cast<size_t>(width) * height, fill);
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ImageD = Image<double>;
using ImageRGB = Image<Vec3>;
using ImageMask = Image<uint8_t>;

}  // namespace gsf
