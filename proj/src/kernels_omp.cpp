#include "aperture/kernels.hpp"

namespace aperture::kernels::parallel {

ImageD convolve_direct(const ImageD& image, const ImageD& kernel) {
  const int rx = kernel.width() / 2;
  const int ry = kernel.height() / 2;
  const int w = image.width();
  const int h = image.height();
  ImageD out(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
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
  const auto n = static_cast<std::ptrdiff_t>(layout.data.size());
  std::vector<fft::Complex> product(layout.data.size());
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) product[i] = layout.data[i] * k[i];
  return crop_inverse(std::move(product), layout);
}

ImageD box_sum(const ImageD& image, int window) {
  if (window < 1 || window % 2 == 0) throw InvalidArgument("box window must be odd and >= 1");
  const int half = window / 2;
  const int w = image.width();
  const int h = image.height();
  ImageD rows(w, h);
  ImageD out(w, h);
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) acc += image.clamped(x + i, y);
        rows(x, y) = acc;
      }
    }
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int j = -half; j <= half; ++j) acc += rows.clamped(x, y + j);
        out(x, y) = acc;
      }
    }
  }
  return out;
}

ImageD gaussian_blur(const ImageD& image, double sigma) {
  const auto taps = gaussian_taps(sigma);
  const int r = static_cast<int>(taps.size() / 2);
  const int w = image.width();
  const int h = image.height();
  ImageD tmp(w, h);
  ImageD out(w, h);
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += taps[i + r] * image.clamped(x + i, y);
        tmp(x, y) = acc;
      }
    }
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int j = -r; j <= r; ++j) acc += taps[j + r] * tmp.clamped(x, y + j);
        out(x, y) = acc;
      }
    }
  }
  return out;
}

}  // namespace aperture::kernels::parallel
