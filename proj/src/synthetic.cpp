#include "aperture/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "aperture/error.hpp"
#include "aperture/fft.hpp"

namespace aperture::synthetic {
namespace {

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr double kContrast = 0.13;  // std of the shaded luminance
constexpr int kTile = 512;          // plane texture period, samples

double shade(double luminance, double tint) {
  return std::clamp(0.5 + kContrast * (0.85 * luminance + 0.5 * tint), 0.05, 0.95);
}

struct PlaneTexture {
  ImageD lum;
  std::array<ImageD, 3> tint;
};

PlaneTexture plane_texture(std::uint64_t seed) {
  PlaneTexture t;
  t.lum = spectral_noise(kTile, kTile, seed);
  for (int c = 0; c < 3; ++c) t.tint[c] = spectral_noise(kTile, kTile, mix(seed * 31 + c + 1));
  return t;
}

// Bilinear lookup with wraparound.
double sample(const ImageD& tile, double u, double v) {
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const double tu = u - fu;
  const double tv = v - fv;
  const auto wrap = [](double k, int n) {
    const auto m = static_cast<long long>(k) % n;
    return static_cast<int>(m < 0 ? m + n : m);
  };
  const int x0 = wrap(fu, tile.width());
  const int y0 = wrap(fv, tile.height());
  const int x1 = (x0 + 1) % tile.width();
  const int y1 = (y0 + 1) % tile.height();
  return (tile(x0, y0) * (1 - tu) + tile(x1, y0) * tu) * (1 - tv) +
         (tile(x0, y1) * (1 - tu) + tile(x1, y1) * tu) * tv;
}

}  // namespace

ImageD spectral_noise(int width, int height, std::uint64_t seed, double f0) {
  if (width < 1 || height < 1) throw InvalidArgument("texture size must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<fft::Complex> a(static_cast<std::size_t>(width) * height);
  for (auto& v : a) v = normal(rng);
  fft::forward(a, height, width);
  for (int j = 0; j < height; ++j) {
    const double fy = (j <= height / 2 ? j : j - height) / static_cast<double>(height);
    for (int i = 0; i < width; ++i) {
      const double fx = (i <= width / 2 ? i : i - width) / static_cast<double>(width);
      a[static_cast<std::size_t>(j) * width + i] /= std::sqrt(fx * fx + fy * fy + f0 * f0);
    }
  }
  a[0] = 0.0;
  fft::inverse(a, height, width);
  ImageD out(width, height);
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.data()[i] = a[i].real();
    sq += a[i].real() * a[i].real();
  }
  const double scale = sq > 0.0 ? 1.0 / std::sqrt(sq / static_cast<double>(a.size())) : 0.0;
  for (double& v : out.pixels()) v *= scale;
  return out;
}

ColorImage textured_image(int width, int height, std::uint64_t seed) {
  const int w = fft::fast_size(width);
  const int h = fft::fast_size(height);
  const ImageD lum = spectral_noise(w, h, seed);
  ColorImage out(width, height);
  for (int c = 0; c < 3; ++c) {
    const ImageD tint = spectral_noise(w, h, mix(seed * 31 + c + 1));
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out[c](x, y) = shade(lum(x, y), tint(x, y));
  }
  return out;
}

bool Plane::covers(double x) const noexcept {
  if (stripe_period <= 0.0) return true;
  double r = std::fmod(x - stripe_offset, stripe_period);
  if (r < 0.0) r += stripe_period;
  return r < stripe_width;
}

SceneFrame render_scene(const PlaneScene& scene, const std::array<double, 3>& position,
                        const Intrinsics& intrinsics, int width, int height) {
  SceneFrame frame;
  frame.rgb = ColorImage(width, height);
  frame.depth = ImageD(width, height);
  frame.intrinsics = intrinsics;
  struct Hit {
    const Plane* plane = nullptr;
    double u = 0.0;
    double v = 0.0;
  };
  std::vector<Hit> hits(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double rx = (x - intrinsics.cx) / intrinsics.fx;
      const double ry = (y - intrinsics.cy) / intrinsics.fy;
      const Plane* hit = nullptr;
      double best_z = std::numeric_limits<double>::infinity();
      double wx = 0.0, wy = 0.0;
      for (const Plane& p : scene.planes) {
        const double z = p.depth - position[2];
        if (!(z > 0.0) || z >= best_z) continue;
        const double px = position[0] + rx * z;
        if (!p.covers(px)) continue;
        hit = &p;
        best_z = z;
        wx = px;
        wy = position[1] + ry * z;
      }
      if (hit == nullptr) continue;
      hits[static_cast<std::size_t>(y) * width + x] = {hit, wx / hit->texel, wy / hit->texel};
      frame.depth(x, y) = best_z;
    }
  }
  std::map<const Plane*, PlaneTexture> textures;
  for (const Plane& p : scene.planes) textures.emplace(&p, plane_texture(p.seed));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Hit& h = hits[static_cast<std::size_t>(y) * width + x];
      if (h.plane == nullptr) continue;
      const PlaneTexture& t = textures.at(h.plane);
      const double lum = sample(t.lum, h.u, h.v);
      for (int c = 0; c < 3; ++c) frame.rgb[c](x, y) = shade(lum, sample(t.tint[c], h.u, h.v));
    }
  }
  return frame;
}

PlaneScene two_plane_scene(double near_depth, double far_depth, double focal_px,
                           double stripe_px, std::uint64_t seed) {
  if (!(near_depth > 0.0) || !(far_depth > near_depth))
    throw InvalidArgument("two_plane_scene needs 0 < near_depth < far_depth");
  if (!(focal_px > 0.0) || !(stripe_px > 0.0))
    throw InvalidArgument("focal length and stripe period must be positive");
  PlaneScene scene;
  Plane wall;
  wall.depth = far_depth;
  wall.texel = 0.5 * far_depth / focal_px;
  wall.seed = seed;
  Plane fence;
  fence.depth = near_depth;
  fence.texel = 0.5 * near_depth / focal_px;
  fence.seed = seed + 101;
  fence.stripe_period = stripe_px * near_depth / focal_px;
  fence.stripe_width = 0.5 * fence.stripe_period;
  scene.planes = {wall, fence};
  return scene;
}

void SequenceSpec::validate(const DepthBins& bins) const {
  if (frames < 2) throw InvalidArgument("sequence needs at least 2 frames");
  if (width < 16 || height < 16) throw InvalidArgument("sequence frames must be at least 16x16");
  const int count = static_cast<int>(bins.centers.size());
  if (near_bin < 0 || near_bin >= count || far_bin < 0 || far_bin >= count)
    throw OutOfRange("plane bins must lie in [0, " + std::to_string(count - 1) + "]");
  if (near_bin >= far_bin) throw InvalidArgument("near_bin must be below far_bin");
  if (!(frame_dt > 0.0)) throw InvalidArgument("frame_dt must be > 0");
  if (!std::isfinite(travel) || !std::isfinite(sway))
    throw InvalidArgument("travel and sway must be finite");
}

Sequence two_plane_sequence(const SequenceSpec& spec, const DepthBins& bins) {
  spec.validate(bins);
  Sequence seq;
  const double f = 0.75 * spec.width;
  seq.intrinsics = {f, f, 0.5 * (spec.width - 1), 0.5 * (spec.height - 1)};
  const PlaneScene scene =
      two_plane_scene(bins.centers[static_cast<std::size_t>(spec.near_bin)],
                      bins.centers[static_cast<std::size_t>(spec.far_bin)], f, 800.0, spec.seed);
  const double last = spec.frames - 1;
  for (int k = 0; k < spec.frames; ++k) {
    const double x = spec.travel * k / last;
    const double y = spec.sway * std::sin(2.0 * std::numbers::pi * k / last);
    seq.frames.push_back(render_scene(scene, {x, y, 0.0}, seq.intrinsics, spec.width, spec.height));
    Pose p;
    p.translation = Eigen::Vector3d(x, y, 0.0);
    p.timestamp = spec.frame_dt * k;
    seq.ground_truth.poses.push_back(p);
  }
  return seq;
}

}  // namespace aperture::synthetic
