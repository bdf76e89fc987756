#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "aperture/vo.hpp"

namespace aperture {
namespace {

constexpr int kTensorWindow = 5;     // structure-tensor averaging window
constexpr int kNmsRadius = 2;
constexpr double kQuality = 1e-3;    // relative to the strongest corner of a level
constexpr double kMinScore = 1e-10;
constexpr int kPatchRadius = 15;     // orientation patch
constexpr int kPatternRadius = 13;   // descriptor test offsets
constexpr int kBorder = 20;          // keeps rotated tests inside the image
constexpr double kDescriptorBlur = 2.0;
constexpr int kBits = 256;

struct TestPair {
  int x1, y1, x2, y2;
};

// Uniform double in [0, 1) from the top 53 bits; avoids the library-specific
// distributions so patterns are identical across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<TestPair> sampling_pattern(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x6272696566ull);
  const double sigma = (2.0 * kPatchRadius + 1.0) / 5.0;
  auto offset = [&] {
    // Box-Muller, clipped to the pattern radius.
    const double u1 = 1.0 - unit(rng);
    const double u2 = unit(rng);
    const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return std::clamp(static_cast<int>(std::lround(sigma * g)), -kPatternRadius, kPatternRadius);
  };
  std::vector<TestPair> pattern(kBits);
  for (auto& p : pattern) {
    do {
      p = {offset(), offset(), offset(), offset()};
    } while (p.x1 == p.x2 && p.y1 == p.y2);
  }
  return pattern;
}

ImageD resample(const ImageD& src, int width, int height, double scale) {
  ImageD out(width, height);
  for (int y = 0; y < height; ++y) {
    const double sy = (y + 0.5) * scale - 0.5;
    const int y0 = static_cast<int>(std::floor(sy));
    const double ty = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = (x + 0.5) * scale - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      const double tx = sx - x0;
      out(x, y) = (src.clamped(x0, y0) * (1 - tx) + src.clamped(x0 + 1, y0) * tx) * (1 - ty) +
                  (src.clamped(x0, y0 + 1) * (1 - tx) + src.clamped(x0 + 1, y0 + 1) * tx) * ty;
    }
  }
  return out;
}

// Smaller eigenvalue of the window-averaged structure tensor (Sobel gradients).
ImageD corner_response(const ImageD& img) {
  const int w = img.width();
  const int h = img.height();
  ImageD ixx(w, h), iyy(w, h), ixy(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto p = [&](int dx, int dy) { return img.clamped(x + dx, y + dy); };
      const double gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1) - p(-1, -1) - 2 * p(-1, 0) - p(-1, 1)) / 8;
      const double gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1) - p(-1, -1) - 2 * p(0, -1) - p(1, -1)) / 8;
      ixx(x, y) = gx * gx;
      iyy(x, y) = gy * gy;
      ixy(x, y) = gx * gy;
    }
  }
  ixx = kernels::box_sum(ixx, kTensorWindow, Exec::serial);
  iyy = kernels::box_sum(iyy, kTensorWindow, Exec::serial);
  ixy = kernels::box_sum(ixy, kTensorWindow, Exec::serial);
  const double n = kTensorWindow * kTensorWindow;
  ImageD score(w, h);
  for (std::size_t i = 0; i < score.size(); ++i) {
    const double a = ixx.data()[i] / n;
    const double c = iyy.data()[i] / n;
    const double b = ixy.data()[i] / n;
    score.data()[i] = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  }
  return score;
}

// Vertex offset of the parabola through (-1, l), (0, m), (1, r).
double parabola_peak(double l, double m, double r) {
  const double denom = l - 2 * m + r;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
}

struct Candidate {
  int x, y;
  double score;
};

std::vector<Candidate> local_maxima(const ImageD& score) {
  double top = 0.0;
  for (double v : score.pixels()) top = std::max(top, v);
  const double threshold = std::max(kQuality * top, kMinScore);
  std::vector<Candidate> out;
  for (int y = kBorder; y < score.height() - kBorder; ++y) {
    for (int x = kBorder; x < score.width() - kBorder; ++x) {
      const double s = score(x, y);
      if (!(s > threshold)) continue;
      bool peak = true;
      for (int dy = -kNmsRadius; dy <= kNmsRadius && peak; ++dy) {
        for (int dx = -kNmsRadius; dx <= kNmsRadius; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double o = score(x + dx, y + dy);
          // Plateaus keep only their first pixel in raster order.
          const bool before = dy < 0 || (dy == 0 && dx < 0);
          if (o > s || (before && o == s)) {
            peak = false;
            break;
          }
        }
      }
      if (peak) out.push_back({x, y, s});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  return out;
}

double orientation(const ImageD& img, int cx, int cy) {
  double m01 = 0.0;
  double m10 = 0.0;
  for (int dy = -kPatchRadius; dy <= kPatchRadius; ++dy) {
    for (int dx = -kPatchRadius; dx <= kPatchRadius; ++dx) {
      if (dx * dx + dy * dy > kPatchRadius * kPatchRadius) continue;
      const double v = img.clamped(cx + dx, cy + dy);
      m10 += dx * v;
      m01 += dy * v;
    }
  }
  return std::atan2(m01, m10);
}

Descriptor describe(const ImageD& smooth, int cx, int cy, double angle,
                    const std::vector<TestPair>& pattern) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const auto at = [&](int px, int py) {
    const int rx = static_cast<int>(std::lround(c * px - s * py));
    const int ry = static_cast<int>(std::lround(s * px + c * py));
    return smooth.clamped(cx + rx, cy + ry);
  };
  Descriptor d{};
  for (int i = 0; i < kBits; ++i) {
    const TestPair& t = pattern[static_cast<std::size_t>(i)];
    if (at(t.x1, t.y1) < at(t.x2, t.y2)) d[static_cast<std::size_t>(i / 64)] |= 1ull << (i % 64);
  }
  return d;
}

}  // namespace

int hamming(const Descriptor& a, const Descriptor& b) noexcept {
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += std::popcount(a[i] ^ b[i]);
  return n;
}

ImageD unsharp_mask(const ImageD& image, double amount, double radius, Exec exec) {
  if (!(amount >= 0.0)) throw InvalidArgument("unsharp amount must be >= 0");
  if (!(radius > 0.0)) throw InvalidArgument("unsharp radius must be > 0");
  if (amount == 0.0) return image;
  const ImageD blurred = kernels::gaussian_blur(image, radius, exec);
  ImageD out(image.width(), image.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = image.data()[i];
    out.data()[i] = std::clamp(v + amount * (v - blurred.data()[i]), 0.0, 1.0);
  }
  return out;
}

ColorImage unsharp_mask(const ColorImage& image, double amount, double radius, Exec exec) {
  ColorImage out;
  for (int c = 0; c < 3; ++c) out[c] = unsharp_mask(image[c], amount, radius, exec);
  return out;
}

std::vector<ImageD> build_pyramid(const ImageD& image, int levels, double scale) {
  if (levels < 1) throw InvalidArgument("pyramid needs at least one level");
  if (!(scale > 1.0)) throw InvalidArgument("pyramid scale factor must be > 1");
  std::vector<ImageD> pyr{image};
  for (int k = 1; k < levels; ++k) {
    const double s = std::pow(scale, k);
    const int w = static_cast<int>(std::lround(image.width() / s));
    const int h = static_cast<int>(std::lround(image.height() / s));
    if (w < 1 || h < 1) break;
    // Anti-alias for the total decimation, then sample level 0 directly.
    const ImageD blurred = kernels::gaussian_blur(image, 0.5 * std::sqrt(s * s - 1.0), Exec::serial);
    pyr.push_back(resample(blurred, w, h, s));
  }
  return pyr;
}

std::vector<Keypoint> detect_features(const ImageD& gray, const VoConfig& config) {
  config.validate();
  const auto pyr = build_pyramid(gray, config.pyramid_levels, config.scale_factor);
  const auto pattern = sampling_pattern(config.seed);

  // Budget per level proportional to its area.
  std::vector<double> weight(pyr.size());
  for (std::size_t k = 0; k < pyr.size(); ++k) weight[k] = std::pow(config.scale_factor, -2.0 * k);
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);

  std::vector<Keypoint> out;
  int assigned = 0;
  for (std::size_t k = 0; k < pyr.size(); ++k) {
    const ImageD& img = pyr[k];
    int budget = k + 1 == pyr.size()
                     ? config.max_features - assigned
                     : static_cast<int>(std::lround(config.max_features * weight[k] / total));
    budget = std::min(budget, config.max_features - assigned);
    if (budget <= 0) continue;
    const ImageD score = corner_response(img);
    auto peaks = local_maxima(score);
    if (static_cast<int>(peaks.size()) > budget) peaks.resize(static_cast<std::size_t>(budget));
    if (peaks.empty()) continue;
    const ImageD smooth = kernels::gaussian_blur(img, kDescriptorBlur, Exec::serial);
    const double s = std::pow(config.scale_factor, static_cast<double>(k));
    for (const Candidate& c : peaks) {
      Keypoint kp;
      const double sx = c.x + parabola_peak(score(c.x - 1, c.y), c.score, score(c.x + 1, c.y));
      const double sy = c.y + parabola_peak(score(c.x, c.y - 1), c.score, score(c.x, c.y + 1));
      kp.x = (sx + 0.5) * s - 0.5;
      kp.y = (sy + 0.5) * s - 0.5;
      kp.level = static_cast<int>(k);
      kp.score = c.score;
      kp.angle = orientation(img, c.x, c.y);
      kp.descriptor = describe(smooth, c.x, c.y, kp.angle, pattern);
      out.push_back(kp);
    }
    assigned += static_cast<int>(peaks.size());
  }
  return out;
}

std::vector<Keypoint> detect_features(const ColorImage& rgb, const VoConfig& config) {
  return detect_features(luma(rgb), config);
}

std::vector<std::pair<int, int>> match_features(std::span<const Keypoint> a,
                                                std::span<const Keypoint> b,
                                                const MatchOptions& options) {
  constexpr int kNone = std::numeric_limits<int>::max();
  struct Best {
    int index = -1;
    int dist = kNone;
    int second = kNone;
  };
  std::vector<Best> ab(a.size());
  std::vector<Best> ba(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const int d = hamming(a[i].descriptor, b[j].descriptor);
      Best& fa = ab[i];
      if (d < fa.dist) {
        fa.second = fa.dist;
        fa.dist = d;
        fa.index = static_cast<int>(j);
      } else if (d < fa.second) {
        fa.second = d;
      }
      Best& fb = ba[j];
      if (d < fb.dist) {
        fb.second = fb.dist;
        fb.dist = d;
        fb.index = static_cast<int>(i);
      } else if (d < fb.second) {
        fb.second = d;
      }
    }
  }
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Best& f = ab[i];
    if (f.index < 0 || f.dist > options.max_distance) continue;
    if (ba[static_cast<std::size_t>(f.index)].index != static_cast<int>(i)) continue;
    if (f.second != kNone && !(f.dist < options.ratio * f.second)) continue;
    out.emplace_back(static_cast<int>(i), f.index);
  }
  return out;
}

}  // namespace aperture
