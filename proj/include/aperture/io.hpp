#pragma once

// File formats: PNG (8/16-bit, sRGB on disk, linear in memory), 16-bit depth
// PNG, portable float map, TUM trajectories, phase-mask and depth-bin text
// files, PSF bank directories, intrinsics files. Every writer goes through
// write_file_atomic (temp file in the same directory, then rename).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aperture/image.hpp"
#include "aperture/optics.hpp"
#include "aperture/render.hpp"
#include "aperture/vo.hpp"

namespace aperture::io {

namespace fs = std::filesystem;

inline constexpr double kDefaultDepthScale = 5000.0;  // PNG units per meter

void write_file_atomic(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

/// Lowercase hex SHA-256 of a file's contents.
std::string sha256_file(const fs::path& path);
std::string sha256_bytes(std::string_view bytes);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);
/// Strict parse of a whole token; throws SyntaxError (line 0) on junk.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;  // 1-based
};

/// Lines of key=value; blank lines and '#' comments (whole-line or trailing)
/// skipped, whitespace around keys and values trimmed. Throws SyntaxError with
/// the line number for lines without '=' or with an empty key, and for keys
/// that repeat.
std::vector<KeyValue> parse_key_values(std::string_view text);

double srgb_to_linear(double v) noexcept;
double linear_to_srgb(double v) noexcept;

/// Gray or RGB(A), 8 or 16 bit; gray is replicated to three channels.
ColorImage read_png_rgb(const fs::path& path);
void write_png_rgb(const fs::path& path, const ColorImage& image, int bit_depth = 8);

/// Gray PNG of values in [0, 1], written as-is (no transfer curve).
void write_png_gray(const fs::path& path, const ImageD& image, int bit_depth = 16);

/// 16-bit single-channel PNG / depth_scale; 0 stays 0 (invalid).
ImageD read_depth_png(const fs::path& path, double depth_scale = kDefaultDepthScale);
/// Invalid or non-positive depths are written as 0. Throws OutOfRange when a
/// depth does not fit in 16 bits at this scale.
void write_depth_png(const fs::path& path, const ImageD& depth,
                     double depth_scale = kDefaultDepthScale);

/// Portable float map ("Pf" gray, "PF" color), little-endian, bottom-up rows.
ImageD read_pfm(const fs::path& path);
ColorImage read_pfm_rgb(const fs::path& path);
void write_pfm(const fs::path& path, const ImageD& image);
void write_pfm(const fs::path& path, const ColorImage& image);

/// "timestamp tx ty tz qx qy qz qw" per line; '#' lines ignored.
Trajectory read_trajectory(const fs::path& path);
std::string format_trajectory(const Trajectory& trajectory);
void write_trajectory(const fs::path& path, const Trajectory& trajectory);

/// Text mask: header "grid pitch", then `grid` rows of `grid` heights (m).
/// Refractive index and Zernike source are not stored.
PhaseMask read_mask(const fs::path& path);
std::string format_mask(const PhaseMask& mask);
void write_mask(const fs::path& path, const PhaseMask& mask);

/// key=value text with count, near, far, spacing (inverse_depth|linear).
DepthBins read_bins(const fs::path& path);
void write_bins(const fs::path& path, const DepthBins& bins);

/// Directory with psf_index.txt, kernels.f64 (exact doubles, read back) and a
/// PFM preview per (bin, channel).
void write_psf_bank(const fs::path& dir, const PsfBank& bank);
PsfBank read_psf_bank(const fs::path& dir);

struct IntrinsicsFile {
  Intrinsics intrinsics;
  std::optional<double> depth_scale;  // absent = caller's default
};

/// key=value text with fx, fy, cx, cy and optional depth_scale.
IntrinsicsFile read_intrinsics(const fs::path& path);
void write_intrinsics(const fs::path& path, const IntrinsicsFile& file);

}  // namespace aperture::io
