#pragma once

// Pipeline configuration: plain-text key=value files with dotted section
// prefixes ("camera.focus_distance=0.85"), '#' comments. Unknown keys are an
// error, missing keys keep their defaults, and the same keys double as CLI
// overrides ("--camera.focus_distance=2.5").

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "aperture/depth.hpp"
#include "aperture/optics.hpp"
#include "aperture/render.hpp"
#include "aperture/vo.hpp"

namespace aperture {

/// Default config path comes from this environment variable when set.
inline constexpr const char* kConfigEnvVar = "APERTURE_CONFIG";

struct MaskSpec {
  std::string file;              // mask text file; empty = synthesize from Zernike
  int grid = 23;                 // cells per side
  double pitch = 135e-6;         // m
  std::vector<double> zernike;   // Noll 1.., m; empty = built-in coefficients
  RefractiveIndex refractive_index;
  bool operator==(const MaskSpec&) const = default;
};

struct BinsSpec {
  int count = 27;
  double near = 0.5;
  double far = 6.0;
  BinSpacing spacing = BinSpacing::inverse_depth;
  bool operator==(const BinsSpec&) const = default;
};

struct RenderConfig {
  double noise_sigma = 0.0;  // additive Gaussian noise on coded frames
  bool operator==(const RenderConfig&) const = default;
};

struct EvalConfig {
  double max_dt = 0.02;      // s
  int trials = 1;            // median over trials
  bool with_scale = false;   // similarity alignment, comparison only
  double max_depth = 6.0;    // m, cap for depth metrics
  bool operator==(const EvalConfig&) const = default;
};

struct DatasetConfig {
  double depth_scale = 5000.0;   // PNG units per meter
  std::string layout = "auto";   // auto | tum | icl
  bool flip_gt_y = false;        // negate the y axis of ground-truth poses
  bool operator==(const DatasetConfig&) const = default;
};

struct PipelineConfig {
  CameraConfig camera;
  MaskSpec mask;
  BinsSpec bins;
  EstimatorConfig estimator;
  VoConfig vo;
  EvalConfig eval;
  RenderConfig render;
  DatasetConfig dataset;
  std::uint64_t seed = 0;

  /// Checks every section; messages name the offending key.
  void validate() const;
  /// VoConfig with the pipeline seed applied.
  VoConfig vo_config() const;
  DepthBins depth_bins() const;

  bool operator==(const PipelineConfig&) const = default;
};

/// Every recognized key, in snapshot order.
const std::vector<std::string>& config_keys();

/// Sets one key. Unknown key -> InvalidConfiguration; unparsable value ->
/// SyntaxError (line 0). Does not validate the whole config.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const PipelineConfig& config, std::string_view key);

/// Parses text; `origin` prefixes error messages. Unknown keys are reported
/// together; values are validated.
PipelineConfig parse_config_text(std::string_view text, const std::string& origin = "<config>");
PipelineConfig parse_config(const std::filesystem::path& path);

/// Full key=value snapshot; parsing it reproduces the config exactly.
std::string format_config(const PipelineConfig& config);

}  // namespace aperture
