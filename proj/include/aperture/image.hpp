#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "aperture/error.hpp"

namespace aperture {

/// Row-major single-channel image. Pixel (x, y) lives at data()[y * width + x].
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked(width) * checked(height)), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

  /// Pixel read with coordinates clamped to the image (replicate-edge).
  const T& clamped(int x, int y) const noexcept {
    x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
    y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
    return data_[index(x, y)];
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool operator==(const Image&) const = default;

 private:
  static int checked(int v) {
    if (v < 0) throw InvalidArgument("image dimensions must be non-negative");
    return v;
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ImageD = Image<double>;

/// Planar three-channel image, channel 0 = red, 1 = green, 2 = blue.
struct ColorImage {
  std::array<ImageD, 3> channels;

  ColorImage() = default;
  ColorImage(int width, int height, double fill = 0.0)
      : channels{ImageD(width, height, fill), ImageD(width, height, fill),
                 ImageD(width, height, fill)} {}

  int width() const noexcept { return channels[0].width(); }
  int height() const noexcept { return channels[0].height(); }
  ImageD& operator[](int c) noexcept { return channels[static_cast<std::size_t>(c)]; }
  const ImageD& operator[](int c) const noexcept {
    return channels[static_cast<std::size_t>(c)];
  }
  bool operator==(const ColorImage&) const = default;
};

/// Luma = 0.299 R + 0.587 G + 0.114 B.
ImageD luma(const ColorImage& rgb);

/// Copy of the sub-rectangle [x0, x0 + w) x [y0, y0 + h).
ImageD crop(const ImageD& image, int x0, int y0, int w, int h);

}  // namespace aperture
