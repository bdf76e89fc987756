#pragma once

// Image-processing kernels. Every kernel exists in two flavors: a plain serial
// reference in `serial::` and an OpenMP data-parallel version in `parallel::`.
// Both perform the same arithmetic per output pixel in the same order, so
// their results are bit-identical; the tests hold them to that.

#include <vector>

#include "aperture/fft.hpp"
#include "aperture/image.hpp"

namespace aperture {

/// Selects the serial reference path or the OpenMP path of a high-level op.
enum class Exec { serial, parallel };

namespace kernels {

enum class Boundary { replicate, periodic };

/// Kernels at least this wide go through the FFT path in `convolve`.
inline constexpr int kFftThreshold = 15;

/// FFT of an image padded by (pad_x, pad_y) pixels on every side.
/// Replicate boundary: padded with clamped edge values onto a fast FFT grid.
/// Periodic boundary: no padding, grid equals the image.
struct PaddedSpectrum {
  int width = 0;
  int height = 0;
  int pad_x = 0;
  int pad_y = 0;
  int rows = 0;
  int cols = 0;
  std::vector<fft::Complex> data;
};

PaddedSpectrum padded_spectrum(const ImageD& image, int pad_x, int pad_y,
                               Boundary boundary = Boundary::replicate);

/// DFT of `kernel` wrapped onto a rows x cols grid with its center at (0, 0).
std::vector<fft::Complex> kernel_spectrum(const ImageD& kernel, int rows, int cols);

/// Inverse-transforms `spectrum` (consumed) laid out like `layout` and returns
/// the real part of the un-padded region.
ImageD crop_inverse(std::vector<fft::Complex> spectrum, const PaddedSpectrum& layout);

namespace serial {
ImageD convolve_direct(const ImageD& image, const ImageD& kernel);
ImageD convolve_fft(const ImageD& image, const ImageD& kernel);
ImageD box_sum(const ImageD& image, int window);
ImageD gaussian_blur(const ImageD& image, double sigma);
}  // namespace serial

namespace parallel {
ImageD convolve_direct(const ImageD& image, const ImageD& kernel);
ImageD convolve_fft(const ImageD& image, const ImageD& kernel);
ImageD box_sum(const ImageD& image, int window);
ImageD gaussian_blur(const ImageD& image, double sigma);
}  // namespace parallel

/// 2-D convolution (not correlation) with an odd-sized kernel centered on the
/// output pixel, replicate-edge boundary. Direct below kFftThreshold, FFT above.
ImageD convolve(const ImageD& image, const ImageD& kernel, Exec exec = Exec::parallel);

/// Sum over a window x window neighborhood (odd window), replicate boundary.
ImageD box_sum(const ImageD& image, int window, Exec exec = Exec::parallel);

/// Separable Gaussian blur, radius ceil(3 sigma), replicate boundary.
ImageD gaussian_blur(const ImageD& image, double sigma, Exec exec = Exec::parallel);

/// Normalized 1-D Gaussian taps of length 2 * ceil(3 sigma) + 1.
std::vector<double> gaussian_taps(double sigma);

}  // namespace kernels
}  // namespace aperture
