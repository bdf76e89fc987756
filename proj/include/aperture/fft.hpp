#pragma once

#include <complex>
#include <span>

namespace aperture::fft {

using Complex = std::complex<double>;

/// Smallest n' >= n of the form 2^a 3^b 5^c 7^d with n' even.
int fast_size(int n);

/// In-place 2-D forward DFT of a row-major rows x cols buffer (no scaling).
void forward(std::span<Complex> data, int rows, int cols);

/// In-place 2-D inverse DFT, scaled by 1 / (rows * cols).
void inverse(std::span<Complex> data, int rows, int cols);

}  // namespace aperture::fft
