#pragma once

// Single-frame depth from a coded image by PSF-bank hypothesis testing.
//
// Each bin d is scored by the Gaussian likelihood of the local image content
// under the model Y = h_d * X + N, with X drawn from a 1/f^2 power spectrum.
// The coded channel is whitened by 1 / sqrt(|H_d|^2 P + 1/s), squared and
// box-summed over the window. The signal scale is profiled out in closed form
// and the noise ratio s by a log-spaced grid around snr_param, so the same
// settings work for clean and noisy frames. Per-channel costs are
// log(1 + G * E / (n * tau)), where G is the geometric mean of the model
// spectrum (the determinant term); channels add. With shiftable windows each
// pixel takes the best window that still contains it, which keeps windows
// straddling an occlusion edge from spreading the wrong depth across it.

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "aperture/image.hpp"
#include "aperture/kernels.hpp"
#include "aperture/optics.hpp"
#include "aperture/render.hpp"

namespace aperture {

struct EstimatorConfig {
  int window = 21;          // odd, pixels
  double snr_param = 1e3;   // center of the signal-to-noise grid
  double snr_span = 2.0;    // grid covers snr_param * 10^[-span, span]
  int snr_steps = 7;        // 1 = fixed snr_param
  bool shiftable_windows = true;
  void validate() const;
  std::vector<double> snr_grid() const;
  bool operator==(const EstimatorConfig&) const = default;
};

struct DepthEstimate {
  ImageD depth;       // every value is one of bins.centers
  ImageD confidence;  // (second - best) / (second + eps)
  Image<int> bin;     // argmin bin index
  DepthBins bins;
};

/// D slices of W x H costs, slice index = bin index (ascending depth).
struct CostVolume {
  std::vector<ImageD> slices;
  int bins() const noexcept { return static_cast<int>(slices.size()); }
};

/// X = conj(H) Y / (|H|^2 + 1 / snr_param), real part. Replicate boundary pads
/// by the kernel radius; periodic treats the image as one period.
ImageD wiener_deconvolve(const ImageD& image, const ImageD& kernel, double snr_param,
                         kernels::Boundary boundary = kernels::Boundary::replicate);

/// Natural-image power spectrum used as the texture prior, at frequency
/// (fx, fy) in cycles per pixel; 1 at the Nyquist radius.
double image_prior(double fx, double fy);

/// Cost volume of one color channel of a coded frame (channel in 0..2).
CostVolume channel_cost_volume(const ImageD& channel_image, int channel, const PsfBank& bank,
                               const EstimatorConfig& config = {}, Exec exec = Exec::parallel);

CostVolume depth_cost_volume(const CodedFrame& coded, const PsfBank& bank,
                             const EstimatorConfig& config = {}, Exec exec = Exec::parallel);

DepthEstimate classify_depth(const CostVolume& costs, const DepthBins& bins);

/// Reuses the bank's kernel spectra across frames of the same size.
class DepthEstimator {
 public:
  DepthEstimator(PsfBank bank, DepthBins bins, EstimatorConfig config = {});

  CostVolume cost_volume(const CodedFrame& coded, Exec exec = Exec::parallel);
  DepthEstimate estimate(const CodedFrame& coded, Exec exec = Exec::parallel);

  const PsfBank& bank() const noexcept { return bank_; }
  const DepthBins& bins() const noexcept { return bins_; }
  const EstimatorConfig& config() const noexcept { return config_; }

 private:
  struct Spectra {
    int rows = 0;
    int cols = 0;
    std::vector<std::vector<double>> signal_power;  // |H|^2 P, [bin * 3 + channel]
    std::vector<std::vector<double>> gains;         // per snr grid value
  };
  const Spectra& spectra_for(int width, int height);

  PsfBank bank_;
  DepthBins bins_;
  EstimatorConfig config_;
  std::map<std::pair<int, int>, Spectra> cache_;
};

struct DepthMetrics {
  double abs_rel = 0.0;
  double rmse = 0.0;
  double delta1 = 0.0;
  double l1 = 0.0;
  double l1_under_3m = 0.0;
  bool l1_under_3m_defined = false;
  std::int64_t valid_pixel_count = 0;
};

/// Metrics over pixels with 0 < gt <= max_depth (finite gt and pred).
DepthMetrics compute_depth_metrics(const ImageD& pred, const ImageD& gt, double max_depth = 6.0);

struct LossWeights {
  double alpha = 2.0;
  double beta = 0.3;  // 1/m
  void validate() const;
  double weight(double gt_depth) const;
};

/// Mean |pred - gt| over pixels with valid ground truth (finite, > 0).
double l1_loss(const ImageD& pred, const ImageD& gt);
/// Same, restricted to pixels where `mask` is nonzero (gt taken as given).
double l1_loss(const ImageD& pred, const ImageD& gt, const Image<std::uint8_t>& mask);

/// Mean alpha^(-beta gt) (pred - gt)^2 over pixels with valid ground truth.
double depth_weighted_loss(const ImageD& pred, const ImageD& gt, const LossWeights& weights = {});
double depth_weighted_loss(const ImageD& pred, const ImageD& gt, const LossWeights& weights,
                           const Image<std::uint8_t>& mask);

}  // namespace aperture
