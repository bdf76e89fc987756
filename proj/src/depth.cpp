#include "aperture/depth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aperture {
namespace {

constexpr double kConfidenceEps = 1e-12;
// Prior spectrum ~ 1 / (f^2 + f0^2), normalized at the Nyquist radius 0.5.
constexpr double kPriorFloor = 0.01;
// Energy unit inside the log; far below any textured window's energy.
constexpr double kEnergyUnit = 1e-12;

void require_same_shape(const ImageD& a, const ImageD& b) {
  if (!a.same_shape(b)) throw InvalidArgument("prediction and ground truth differ in size");
}

int bank_radius(const PsfBank& bank) {
  int r = 0;
  for (const auto& row : bank.psfs)
    for (const auto& psf : row) r = std::max({r, psf.kernel.width() / 2, psf.kernel.height() / 2});
  return r;
}

double frequency(int k, int n) { return (k <= n / 2 ? k : k - n) / static_cast<double>(n); }

std::vector<double> signal_power(const ImageD& kernel, int rows, int cols) {
  const auto h = kernels::kernel_spectrum(kernel, rows, cols);
  std::vector<double> p(h.size());
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i) {
      const auto k = static_cast<std::size_t>(j) * cols + i;
      p[k] = std::norm(h[k]) * image_prior(frequency(i, cols), frequency(j, rows));
    }
  return p;
}

// exp(mean log(power + 1/s)) for each s of the grid.
std::vector<double> model_gains(const std::vector<double>& power, const std::vector<double>& grid) {
  std::vector<double> g;
  g.reserve(grid.size());
  for (double snr : grid) {
    double acc = 0.0;
    for (double v : power) acc += std::log(v + 1.0 / snr);
    g.push_back(std::exp(acc / static_cast<double>(power.size())));
  }
  return g;
}

// Separable running minimum over a size x size neighborhood, edges clamped.
ImageD min_filter(const ImageD& in, int size) {
  const int r = size / 2;
  ImageD tmp(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      double m = in(x, y);
      for (int d = -r; d <= r; ++d) m = std::min(m, in.clamped(x + d, y));
      tmp(x, y) = m;
    }
  ImageD out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      double m = tmp(x, y);
      for (int d = -r; d <= r; ++d) m = std::min(m, tmp.clamped(x, y + d));
      out(x, y) = m;
    }
  return out;
}

// log(1 + min_s G_s box(z_s^2) / (n tau)) for one bin of one channel, the
// energy optionally min-filtered over the window first.
ImageD bin_cost(const kernels::PaddedSpectrum& y, const std::vector<double>& power,
                const std::vector<double>& gains, const std::vector<double>& grid, int window,
                bool shiftable) {
  ImageD best(y.width, y.height, std::numeric_limits<double>::infinity());
  const double n = static_cast<double>(window) * window;
  std::vector<fft::Complex> z(y.data.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double reg = 1.0 / grid[k];
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = y.data[i] / std::sqrt(power[i] + reg);
    z[0] = 0.0;  // mean brightness carries no defocus cue
    ImageD e = kernels::crop_inverse(z, y);
    for (double& v : e.pixels()) v *= v;
    e = kernels::box_sum(e, window, Exec::serial);
    auto b = best.pixels();
    auto src = e.pixels();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::min(b[i], gains[k] * src[i] / n);
  }
  if (shiftable) best = min_filter(best, window);
  for (double& v : best.pixels()) v = std::log1p(v / kEnergyUnit);
  return best;
}

void accumulate(ImageD& dst, const ImageD& src) {
  auto d = dst.pixels();
  auto s = src.pixels();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// slices[b] += cost of bin b; Power(b) and Gains(b) give the model for bin b.
template <typename Power, typename Gains>
void add_channel_costs(CostVolume& volume, const kernels::PaddedSpectrum& y,
                       const EstimatorConfig& config, Power&& power, Gains&& gains, Exec exec) {
  const int bins = volume.bins();
  const auto grid = config.snr_grid();
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < bins; ++b)
      accumulate(volume.slices[b], bin_cost(y, power(b), gains(b), grid, config.window, config.shiftable_windows));
  } else {
    for (int b = 0; b < bins; ++b)
      accumulate(volume.slices[b], bin_cost(y, power(b), gains(b), grid, config.window, config.shiftable_windows));
  }
}

CostVolume empty_volume(std::size_t bins, int w, int h) {
  CostVolume v;
  v.slices.assign(bins, ImageD(w, h));
  return v;
}

}  // namespace

void EstimatorConfig::validate() const {
  if (window < 1 || window % 2 == 0) throw InvalidArgument("estimator.window must be odd and >= 1");
  if (!(snr_param > 0.0) || !std::isfinite(snr_param))
    throw InvalidArgument("estimator.snr_param must be > 0");
  if (!(snr_span >= 0.0) || snr_span > 12.0)
    throw InvalidArgument("estimator.snr_span must be in [0, 12]");
  if (snr_steps < 1 || snr_steps > 64) throw InvalidArgument("estimator.snr_steps must be 1..64");
}

std::vector<double> EstimatorConfig::snr_grid() const {
  if (snr_steps == 1) return {snr_param};
  std::vector<double> g;
  for (int k = 0; k < snr_steps; ++k) {
    const double t = -snr_span + 2.0 * snr_span * k / (snr_steps - 1);
    g.push_back(snr_param * std::pow(10.0, t));
  }
  return g;
}

double image_prior(double fx, double fy) {
  const double f0 = kPriorFloor * kPriorFloor;
  return (0.25 + f0) / (fx * fx + fy * fy + f0);
}

ImageD wiener_deconvolve(const ImageD& image, const ImageD& kernel, double snr_param,
                         kernels::Boundary boundary) {
  if (!(snr_param > 0.0)) throw InvalidArgument("snr_param must be > 0");
  auto y = kernels::padded_spectrum(image, kernel.width() / 2, kernel.height() / 2, boundary);
  auto h = kernels::kernel_spectrum(kernel, y.rows, y.cols);
  const double reg = 1.0 / snr_param;
  std::vector<fft::Complex> x(y.data.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::conj(h[i]) * y.data[i] / (std::norm(h[i]) + reg);
  return kernels::crop_inverse(std::move(x), y);
}

CostVolume channel_cost_volume(const ImageD& channel_image, int channel, const PsfBank& bank,
                               const EstimatorConfig& config, Exec exec) {
  config.validate();
  if (channel < 0 || channel >= kChannels) throw InvalidArgument("channel must be 0..2");
  if (bank.size() == 0) throw InvalidArgument("PSF bank is empty");
  const int r = bank_radius(bank);
  const auto y = kernels::padded_spectrum(channel_image, r, r);
  const auto grid = config.snr_grid();
  std::vector<std::vector<double>> power(bank.size());
  std::vector<std::vector<double>> gains(bank.size());
  for (std::size_t b = 0; b < bank.size(); ++b) {
    power[b] = signal_power(bank.kernel(b, channel), y.rows, y.cols);
    gains[b] = model_gains(power[b], grid);
  }
  CostVolume volume = empty_volume(bank.size(), channel_image.width(), channel_image.height());
  add_channel_costs(
      volume, y, config, [&](int b) -> const std::vector<double>& { return power[b]; },
      [&](int b) -> const std::vector<double>& { return gains[b]; }, exec);
  return volume;
}

CostVolume depth_cost_volume(const CodedFrame& coded, const PsfBank& bank,
                             const EstimatorConfig& config, Exec exec) {
  CostVolume volume = empty_volume(bank.size(), coded.rgb.width(), coded.rgb.height());
  for (int c = 0; c < kChannels; ++c) {
    CostVolume part = channel_cost_volume(coded.rgb[c], c, bank, config, exec);
    for (int b = 0; b < volume.bins(); ++b) accumulate(volume.slices[b], part.slices[b]);
  }
  return volume;
}

DepthEstimate classify_depth(const CostVolume& costs, const DepthBins& bins) {
  if (costs.slices.empty()) throw InvalidArgument("cost volume is empty");
  if (static_cast<std::size_t>(costs.bins()) != bins.centers.size())
    throw InvalidArgument("cost volume and depth bins disagree on the number of bins");
  const int w = costs.slices[0].width();
  const int h = costs.slices[0].height();
  DepthEstimate out;
  out.depth = ImageD(w, h);
  out.confidence = ImageD(w, h);
  out.bin = Image<int>(w, h);
  out.bins = bins;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int best = 0;
      double best_cost = std::numeric_limits<double>::infinity();
      double second = std::numeric_limits<double>::infinity();
      for (int b = 0; b < costs.bins(); ++b) {
        const double c = costs.slices[b](x, y);
        if (!std::isfinite(c)) throw InvalidArgument("cost volume contains non-finite values");
        if (c < best_cost) {  // strict: ties keep the smaller depth
          second = best_cost;
          best_cost = c;
          best = b;
        } else if (c < second) {
          second = c;
        }
      }
      out.bin(x, y) = best;
      out.depth(x, y) = bins.centers[static_cast<std::size_t>(best)];
      out.confidence(x, y) =
          std::isfinite(second) ? (second - best_cost) / (second + kConfidenceEps) : 1.0;
    }
  }
  return out;
}

DepthEstimator::DepthEstimator(PsfBank bank, DepthBins bins, EstimatorConfig config)
    : bank_(std::move(bank)), bins_(std::move(bins)), config_(config) {
  config_.validate();
  require_matching_bins(bank_, bins_);
}

const DepthEstimator::Spectra& DepthEstimator::spectra_for(int width, int height) {
  const auto key = std::make_pair(width, height);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const int r = bank_radius(bank_);
  Spectra s;
  s.cols = fft::fast_size(width + 2 * r);
  s.rows = fft::fast_size(height + 2 * r);
  const auto grid = config_.snr_grid();
  const int jobs = static_cast<int>(bank_.size()) * kChannels;
  s.signal_power.resize(static_cast<std::size_t>(jobs));
  s.gains.resize(static_cast<std::size_t>(jobs));
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < jobs; ++j) {
    s.signal_power[j] = signal_power(
        bank_.kernel(static_cast<std::size_t>(j / kChannels), j % kChannels), s.rows, s.cols);
    s.gains[j] = model_gains(s.signal_power[j], grid);
  }
  return cache_.emplace(key, std::move(s)).first->second;
}

CostVolume DepthEstimator::cost_volume(const CodedFrame& coded, Exec exec) {
  const int w = coded.rgb.width();
  const int h = coded.rgb.height();
  const Spectra& s = spectra_for(w, h);
  const int r = bank_radius(bank_);
  CostVolume volume = empty_volume(bank_.size(), w, h);
  for (int c = 0; c < kChannels; ++c) {
    const auto y = kernels::padded_spectrum(coded.rgb[c], r, r);
    const auto at = [&](int b) { return static_cast<std::size_t>(b * kChannels + c); };
    add_channel_costs(
        volume, y, config_, [&](int b) -> const std::vector<double>& { return s.signal_power[at(b)]; },
        [&](int b) -> const std::vector<double>& { return s.gains[at(b)]; }, exec);
  }
  return volume;
}

DepthEstimate DepthEstimator::estimate(const CodedFrame& coded, Exec exec) {
  return classify_depth(cost_volume(coded, exec), bins_);
}

DepthMetrics compute_depth_metrics(const ImageD& pred, const ImageD& gt, double max_depth) {
  require_same_shape(pred, gt);
  DepthMetrics m;
  double abs_rel = 0.0, sq = 0.0, l1 = 0.0, l1_near = 0.0;
  std::int64_t good = 0, near = 0;
  auto p = pred.pixels();
  auto g = gt.pixels();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double gv = g[i];
    const double pv = p[i];
    if (!std::isfinite(gv) || !(gv > 0.0) || gv > max_depth || !std::isfinite(pv)) continue;
    const double err = std::abs(pv - gv);
    abs_rel += err / gv;
    sq += err * err;
    l1 += err;
    if (pv > 0.0 && std::max(pv / gv, gv / pv) < 1.25) ++good;
    if (gv < 3.0) {
      l1_near += err;
      ++near;
    }
    ++m.valid_pixel_count;
  }
  if (m.valid_pixel_count == 0) throw EmptyInput("no valid ground-truth pixels in range");
  const double n = static_cast<double>(m.valid_pixel_count);
  m.abs_rel = abs_rel / n;
  m.rmse = std::sqrt(sq / n);
  m.l1 = l1 / n;
  m.delta1 = static_cast<double>(good) / n;
  m.l1_under_3m_defined = near > 0;
  m.l1_under_3m = near > 0 ? l1_near / static_cast<double>(near) : 0.0;
  return m;
}

void LossWeights::validate() const {
  if (!(alpha > 0.0)) throw InvalidArgument("loss alpha must be > 0");
  if (!std::isfinite(beta)) throw InvalidArgument("loss beta must be finite");
}

double LossWeights::weight(double gt_depth) const { return std::pow(alpha, -beta * gt_depth); }

namespace {

Image<std::uint8_t> valid_gt_mask(const ImageD& gt) {
  Image<std::uint8_t> mask(gt.width(), gt.height());
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) mask(x, y) = is_valid_depth(gt(x, y)) ? 1 : 0;
  return mask;
}

template <typename Term>
double masked_mean(const ImageD& pred, const ImageD& gt, const Image<std::uint8_t>& mask,
                   Term&& term) {
  require_same_shape(pred, gt);
  if (mask.width() != gt.width() || mask.height() != gt.height())
    throw InvalidArgument("loss mask differs in size from the depth maps");
  double sum = 0.0;
  std::int64_t n = 0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!mask(x, y)) continue;
      sum += term(pred(x, y), gt(x, y));
      ++n;
    }
  }
  if (n == 0) throw EmptyInput("loss has no valid pixels");
  return sum / static_cast<double>(n);
}

}  // namespace

double l1_loss(const ImageD& pred, const ImageD& gt, const Image<std::uint8_t>& mask) {
  return masked_mean(pred, gt, mask, [](double p, double g) { return std::abs(p - g); });
}

double l1_loss(const ImageD& pred, const ImageD& gt) {
  return l1_loss(pred, gt, valid_gt_mask(gt));
}

double depth_weighted_loss(const ImageD& pred, const ImageD& gt, const LossWeights& weights,
                           const Image<std::uint8_t>& mask) {
  weights.validate();
  return masked_mean(pred, gt, mask, [&](double p, double g) {
    return weights.weight(g) * (p - g) * (p - g);
  });
}

double depth_weighted_loss(const ImageD& pred, const ImageD& gt, const LossWeights& weights) {
  return depth_weighted_loss(pred, gt, weights, valid_gt_mask(gt));
}

}  // namespace aperture
