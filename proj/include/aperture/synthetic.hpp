#pragma once

// Procedural fixtures: 1/f-spectrum textures and fronto-parallel plane scenes
// seen by a translating pinhole camera. Used by tests, the acceptance suite
// and the `synth` CLI subcommand.

#include <cstdint>
#include <limits>
#include <vector>

#include "aperture/image.hpp"
#include "aperture/render.hpp"
#include "aperture/vo.hpp"

namespace aperture::synthetic {

/// Periodic Gaussian field with power spectrum 1 / (f^2 + f0^2), zero mean and
/// unit standard deviation. f0 is in cycles per sample.
ImageD spectral_noise(int width, int height, std::uint64_t seed, double f0 = 0.01);

/// Colored texture with natural-image statistics, values in [0.05, 0.95].
ColorImage textured_image(int width, int height, std::uint64_t seed);

/// Fronto-parallel plane at world depth `depth`. Optional vertical stripes: the
/// plane exists where fmod(X - stripe_offset, stripe_period) < stripe_width.
struct Plane {
  double depth = 1.0;               // world z, m
  double texel = 0.01;              // size of one texture sample on the plane, m
  std::uint64_t seed = 1;
  double stripe_period = 0.0;       // 0 = unbounded plane
  double stripe_width = 0.0;
  double stripe_offset = 0.0;
  bool covers(double x) const noexcept;
};

struct PlaneScene {
  std::vector<Plane> planes;
};

/// All-in-focus frame of `scene` from a camera at world position `position`
/// looking down +z (identity rotation). Depth is camera z; pixels that see no
/// plane get depth 0 and black color.
SceneFrame render_scene(const PlaneScene& scene, const std::array<double, 3>& position,
                        const Intrinsics& intrinsics, int width, int height);

/// Near striped plane in front of a far textured wall. Texture samples are half
/// a pixel at each plane's depth for a camera of focal length `focal_px`; the
/// stripes repeat every `stripe_px` pixels at the near depth, half of it solid.
PlaneScene two_plane_scene(double near_depth, double far_depth, double focal_px,
                           double stripe_px = 800.0, std::uint64_t seed = 7);

/// Camera sliding sideways past a two-plane scene. Intrinsics are fx = fy =
/// 0.75 * width with the principal point at the image center; the near and far
/// planes sit at bin centers `near_bin` and `far_bin`.
struct SequenceSpec {
  int frames = 30;
  int width = 320;
  int height = 240;
  int near_bin = 10;
  int far_bin = 16;
  double travel = 0.5;     // m along x over the whole sequence
  double sway = 0.02;      // m, one period of y motion over the sequence
  double frame_dt = 0.1;   // s
  std::uint64_t seed = 7;

  void validate(const DepthBins& bins) const;
};

struct Sequence {
  Intrinsics intrinsics;
  std::vector<SceneFrame> frames;
  Trajectory ground_truth;  // camera-to-world, one pose per frame
};

Sequence two_plane_sequence(const SequenceSpec& spec, const DepthBins& bins);

}  // namespace aperture::synthetic
