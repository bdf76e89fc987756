#include <cmath>

#include "aperture/kernels.hpp"

namespace aperture::kernels {

namespace {
void require_odd(const ImageD& kernel) {
  if (kernel.width() % 2 == 0 || kernel.height() % 2 == 0 || kernel.empty()) {
    throw InvalidArgument("convolution kernel must have odd, nonzero dimensions");
  }
}
}  // namespace

PaddedSpectrum padded_spectrum(const ImageD& image, int pad_x, int pad_y,
                               Boundary boundary) {
  if (image.empty()) throw InvalidArgument("cannot transform an empty image");
  PaddedSpectrum out;
  out.width = image.width();
  out.height = image.height();
  if (boundary == Boundary::periodic) {
    out.cols = image.width();
    out.rows = image.height();
  } else {
    out.pad_x = pad_x;
    out.pad_y = pad_y;
    out.cols = fft::fast_size(image.width() + 2 * pad_x);
    out.rows = fft::fast_size(image.height() + 2 * pad_y);
  }
  out.data.resize(static_cast<std::size_t>(out.rows) * out.cols);
  for (int r = 0; r < out.rows; ++r) {
    for (int c = 0; c < out.cols; ++c) {
      out.data[static_cast<std::size_t>(r) * out.cols + c] =
          image.clamped(c - out.pad_x, r - out.pad_y);
    }
  }
  fft::forward(out.data, out.rows, out.cols);
  return out;
}

std::vector<fft::Complex> kernel_spectrum(const ImageD& kernel, int rows, int cols) {
  require_odd(kernel);
  const int rx = kernel.width() / 2;
  const int ry = kernel.height() / 2;
  if (kernel.width() > cols || kernel.height() > rows) {
    throw InvalidArgument("kernel larger than the FFT grid");
  }
  std::vector<fft::Complex> spec(static_cast<std::size_t>(rows) * cols);
  for (int j = 0; j < kernel.height(); ++j) {
    const int r = ((j - ry) % rows + rows) % rows;
    for (int i = 0; i < kernel.width(); ++i) {
      const int c = ((i - rx) % cols + cols) % cols;
      spec[static_cast<std::size_t>(r) * cols + c] = kernel(i, j);
    }
  }
  fft::forward(spec, rows, cols);
  return spec;
}

ImageD crop_inverse(std::vector<fft::Complex> spectrum, const PaddedSpectrum& layout) {
  fft::inverse(spectrum, layout.rows, layout.cols);
  ImageD out(layout.width, layout.height);
  for (int y = 0; y < layout.height; ++y) {
    const std::size_t row = static_cast<std::size_t>(y + layout.pad_y) * layout.cols;
    for (int x = 0; x < layout.width; ++x) {
      out(x, y) = spectrum[row + x + layout.pad_x].real();
    }
  }
  return out;
}

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

ImageD convolve(const ImageD& image, const ImageD& kernel, Exec exec) {
  require_odd(kernel);
  const bool use_fft = std::max(kernel.width(), kernel.height()) >= kFftThreshold;
  if (exec == Exec::serial) {
    return use_fft ? serial::convolve_fft(image, kernel)
                   : serial::convolve_direct(image, kernel);
  }
  return use_fft ? parallel::convolve_fft(image, kernel)
                 : parallel::convolve_direct(image, kernel);
}

ImageD box_sum(const ImageD& image, int window, Exec exec) {
  return exec == Exec::serial ? serial::box_sum(image, window)
                              : parallel::box_sum(image, window);
}

ImageD gaussian_blur(const ImageD& image, double sigma, Exec exec) {
  return exec == Exec::serial ? serial::gaussian_blur(image, sigma)
                              : parallel::gaussian_blur(image, sigma);
}

}  // namespace aperture::kernels
