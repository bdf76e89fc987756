#pragma once

// Layered, occlusion-aware defocus rendering of RGB-D frames.
//
// Depth is quantized into D layers. Layers are composited far to near; for
// layer d with kernel h_d and binary mask O_d:
//
//   L_d = h_d * (I . O_d)        blurred masked radiance
//   C_d = h_d * O_d              blurred coverage
//   out = (L_d / max(C_d, eps)) * alpha_d + out * (1 - alpha_d),
//   alpha_d = clamp(C_d, 0, 1), applied only where C_d > kCoverageThreshold.
//
// A scene at constant depth reduces to plain convolution with h_d.

#include <cstdint>
#include <optional>
#include <vector>

#include "aperture/image.hpp"
#include "aperture/kernels.hpp"
#include "aperture/optics.hpp"

namespace aperture {

inline constexpr double kCoverageEpsilon = 1e-6;
inline constexpr double kCoverageThreshold = 1e-3;

enum class BinSpacing { inverse_depth, linear };

struct DepthBins {
  int count = 27;
  double near = 0.5;   // m
  double far = 6.0;    // m
  BinSpacing spacing = BinSpacing::inverse_depth;
  std::vector<double> centers;  // ascending depth

  /// Index of the center nearest to `depth` in inverse depth; exact ties go to
  /// the smaller depth.
  int nearest(double depth) const;
};

DepthBins make_depth_bins(int count, double near, double far,
                          BinSpacing spacing = BinSpacing::inverse_depth);

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  bool operator==(const Intrinsics&) const = default;
};

struct SceneFrame {
  ColorImage rgb;    // linear intensities in [0, 1]
  ImageD depth;      // z-depth in m; 0 or NaN marks invalid
  Intrinsics intrinsics;
};

/// Valid depth: finite and > 0.
bool is_valid_depth(double d) noexcept;

struct LayerDecomposition {
  Image<int> layer;            // bin index per pixel, ascending depth (0 = nearest)
  Image<std::uint8_t> invalid; // 1 where the input depth was invalid
  std::vector<ImageD> masks;   // one binary map per bin
  std::vector<double> centers; // bin centers the decomposition was made with
};

LayerDecomposition quantize_depth(const ImageD& depth, const DepthBins& bins);
LayerDecomposition quantize_depth(const SceneFrame& frame, const DepthBins& bins);

struct CodedFrame {
  ColorImage rgb;                   // linear, >= 0
  std::uint64_t bank_fingerprint = 0;
};

CodedFrame render_coded(const SceneFrame& frame, const LayerDecomposition& decomposition,
                        const PsfBank& bank, Exec exec = Exec::parallel);

/// Bins of `bank` must match `bins` (count and centers within 1e-12 relative).
void require_matching_bins(const PsfBank& bank, const DepthBins& bins);

CodedFrame add_sensor_noise(const CodedFrame& frame, double gaussian_sigma,
                            std::uint64_t seed);

}  // namespace aperture
