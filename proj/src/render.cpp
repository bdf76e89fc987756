#include "aperture/render.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace aperture {

DepthBins make_depth_bins(int count, double near, double far, BinSpacing spacing) {
  if (count < 1) throw InvalidArgument("bins.count must be >= 1");
  if (!(near > 0.0) || !(far > near)) throw InvalidArgument("bins range must satisfy 0 < near < far");
  DepthBins bins;
  bins.count = count;
  bins.near = near;
  bins.far = far;
  bins.spacing = spacing;
  bins.centers.resize(static_cast<std::size_t>(count));
  if (spacing == BinSpacing::linear) {
    const double step = (far - near) / count;
    for (int i = 0; i < count; ++i) bins.centers[i] = near + (i + 0.5) * step;
  } else {
    // Uniform midpoints in inverse depth, listed nearest first.
    const double lo = 1.0 / far;
    const double step = (1.0 / near - lo) / count;
    for (int i = 0; i < count; ++i) bins.centers[count - 1 - i] = 1.0 / (lo + (i + 0.5) * step);
  }
  return bins;
}

int DepthBins::nearest(double depth) const {
  const double inv = 1.0 / depth;
  int best = 0;
  double best_dist = std::abs(1.0 / centers[0] - inv);
  for (std::size_t i = 1; i < centers.size(); ++i) {
    const double dist = std::abs(1.0 / centers[i] - inv);
    if (dist < best_dist) {  // strict: ties keep the nearer (smaller-depth) bin
      best = static_cast<int>(i);
      best_dist = dist;
    }
  }
  return best;
}

bool is_valid_depth(double d) noexcept { return std::isfinite(d) && d > 0.0; }

LayerDecomposition quantize_depth(const ImageD& depth, const DepthBins& bins) {
  if (bins.centers.empty()) throw InvalidArgument("depth bins have no centers");
  const int w = depth.width();
  const int h = depth.height();
  const int farthest = static_cast<int>(bins.centers.size()) - 1;
  LayerDecomposition out;
  out.layer = Image<int>(w, h);
  out.invalid = Image<std::uint8_t>(w, h);
  out.centers = bins.centers;
  out.masks.assign(bins.centers.size(), ImageD(w, h));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = depth(x, y);
      int idx = farthest;
      if (is_valid_depth(d)) {
        idx = bins.nearest(d);
      } else {
        out.invalid(x, y) = 1;
      }
      out.layer(x, y) = idx;
      out.masks[static_cast<std::size_t>(idx)](x, y) = 1.0;
    }
  }
  return out;
}

LayerDecomposition quantize_depth(const SceneFrame& frame, const DepthBins& bins) {
  if (frame.depth.width() != frame.rgb.width() || frame.depth.height() != frame.rgb.height())
    throw InvalidArgument("depth map dimensions do not match the rgb image");
  return quantize_depth(frame.depth, bins);
}

void require_matching_bins(const PsfBank& bank, const DepthBins& bins) {
  if (bank.depth_bins.size() != bins.centers.size())
    throw InvalidArgument("PSF bank has " + std::to_string(bank.depth_bins.size()) +
                          " bins but the depth bins have " +
                          std::to_string(bins.centers.size()));
  for (std::size_t i = 0; i < bins.centers.size(); ++i) {
    if (std::abs(bank.depth_bins[i] - bins.centers[i]) > 1e-12 * bins.centers[i])
      throw InvalidArgument("PSF bank bin centers differ from the depth bins");
  }
}

namespace {

struct LayerBlur {
  ImageD radiance;  // h * (I . O)
  ImageD coverage;  // h * O
};

LayerBlur blur_layer(const ImageD& channel, const ImageD& mask, const ImageD& kernel) {
  ImageD masked(channel.width(), channel.height());
  auto c = channel.pixels();
  auto m = mask.pixels();
  auto o = masked.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = c[i] * m[i];
  return {kernels::convolve(masked, kernel, Exec::serial),
          kernels::convolve(mask, kernel, Exec::serial)};
}

bool has_pixels(const ImageD& mask) {
  return std::any_of(mask.pixels().begin(), mask.pixels().end(),
                     [](double v) { return v != 0.0; });
}

}  // namespace

CodedFrame render_coded(const SceneFrame& frame, const LayerDecomposition& decomposition,
                        const PsfBank& bank, Exec exec) {
  const int w = frame.rgb.width();
  const int h = frame.rgb.height();
  if (decomposition.masks.size() != bank.size())
    throw InvalidArgument("layer decomposition and PSF bank disagree on the number of bins");
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (decomposition.centers.size() != bank.size() ||
        std::abs(decomposition.centers[i] - bank.depth_bins[i]) > 1e-12 * bank.depth_bins[i])
      throw InvalidArgument("PSF bank bin centers differ from the decomposition's bins");
  }
  if (decomposition.layer.width() != w || decomposition.layer.height() != h)
    throw InvalidArgument("layer decomposition size does not match the frame");

  std::vector<int> active;
  for (std::size_t b = 0; b < decomposition.masks.size(); ++b)
    if (has_pixels(decomposition.masks[b])) active.push_back(static_cast<int>(b));
  // Far to near.
  std::reverse(active.begin(), active.end());
  const int layers = static_cast<int>(active.size());

  CodedFrame out;
  out.rgb = ColorImage(w, h);
  out.bank_fingerprint = bank.fingerprint();

  for (int c = 0; c < kChannels; ++c) {
    std::vector<LayerBlur> blurred(active.size());
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
      for (int l = 0; l < layers; ++l) {
        const auto b = static_cast<std::size_t>(active[l]);
        blurred[l] = blur_layer(frame.rgb[c], decomposition.masks[b], bank.kernel(b, c));
      }
    } else {
      for (int l = 0; l < layers; ++l) {
        const auto b = static_cast<std::size_t>(active[l]);
        blurred[l] = blur_layer(frame.rgb[c], decomposition.masks[b], bank.kernel(b, c));
      }
    }

    ImageD& dst = out.rgb[c];
    const auto n = static_cast<std::ptrdiff_t>(dst.size());
    double* acc = dst.data();
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      double value = 0.0;
      for (const LayerBlur& layer : blurred) {
        const double cov = layer.coverage.data()[i];
        if (!(cov > kCoverageThreshold)) continue;
        const double alpha = std::clamp(cov, 0.0, 1.0);
        const double color = layer.radiance.data()[i] / std::max(cov, kCoverageEpsilon);
        value = color * alpha + value * (1.0 - alpha);
      }
      acc[i] = std::max(value, 0.0);
    }
  }
  return out;
}

CodedFrame add_sensor_noise(const CodedFrame& frame, double gaussian_sigma,
                            std::uint64_t seed) {
  if (!(gaussian_sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  CodedFrame out = frame;
  if (gaussian_sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, gaussian_sigma);
  for (int c = 0; c < kChannels; ++c)
    for (double& v : out.rgb[c].pixels()) v = std::max(0.0, v + noise(rng));
  return out;
}

}  // namespace aperture
