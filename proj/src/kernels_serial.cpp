// Reference implementations. Kept deliberately plain; the OpenMP versions in
// kernels_omp.cpp must reproduce these bit for bit.

#include "aperture/kernels.hpp"

namespace aperture::kernels::serial {

ImageD convolve_direct(const ImageD& image, const ImageD& kernel) {
  const int rx = kernel.width() / 2;
  const int ry = kernel.height() / 2;
  ImageD out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double acc = 0.0;
      for (int j = -ry; j <= ry; ++j) {
        for (int i = -rx; i <= rx; ++i) {
          acc += kernel(i + rx, j + ry) * image.clamped(x - i, y - j);
        }
      }
      out(x, y) = acc;
    }
  }
  return out;
}

ImageD convolve_fft(const ImageD& image, const ImageD& kernel) {
  PaddedSpectrum layout =
      padded_spectrum(image, kernel.width() / 2, kernel.height() / 2);
  auto k = kernel_spectrum(kernel, layout.rows, layout.cols);
  std::vector<fft::Complex> product(layout.data.size());
  for (std::size_t i = 0; i < product.size(); ++i) product[i] = layout.data[i] * k[i];
  return crop_inverse(std::move(product), layout);
}

ImageD box_sum(const ImageD& image, int window) {
  if (window < 1 || window % 2 == 0) throw InvalidArgument("box window must be odd and >= 1");
  const int h = window / 2;
  ImageD rows(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double acc = 0.0;
      for (int i = -h; i <= h; ++i) acc += image.clamped(x + i, y);
      rows(x, y) = acc;
    }
  }
  ImageD out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double acc = 0.0;
      for (int j = -h; j <= h; ++j) acc += rows.clamped(x, y + j);
      out(x, y) = acc;
    }
  }
  return out;
}

ImageD gaussian_blur(const ImageD& image, double sigma) {
  const auto taps = gaussian_taps(sigma);
  const int r = static_cast<int>(taps.size() / 2);
  ImageD tmp(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += taps[i + r] * image.clamped(x + i, y);
      tmp(x, y) = acc;
    }
  }
  ImageD out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double acc = 0.0;
      for (int j = -r; j <= r; ++j) acc += taps[j + r] * tmp.clamped(x, y + j);
      out(x, y) = acc;
    }
  }
  return out;
}

}  // namespace aperture::kernels::serial
