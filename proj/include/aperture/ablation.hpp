#pragma once

// Parameter sweeps: one full pipeline run per value of a single axis.

#include <optional>
#include <string>
#include <vector>

#include "aperture/config.hpp"
#include "aperture/dataset.hpp"
#include "aperture/depth.hpp"

namespace aperture {

enum class AblationAxis { mask_size, focus_distance };

AblationAxis parse_axis(const std::string& name);
const char* axis_name(AblationAxis axis);

struct AblationSpec {
  AblationAxis axis = AblationAxis::mask_size;
  std::vector<double> values;  // cells per side, or focus distances in m

  /// Nonempty, distinct; mask sizes are integers >= 3.
  void validate() const;
};

/// `base` with the axis set to `value`. Mask sizes keep the mask's physical
/// width (pitch scales as grid_base * pitch_base / value).
PipelineConfig ablation_config(const PipelineConfig& base, AblationAxis axis, double value);

struct AblationRow {
  double value = 0.0;
  bool ok = false;
  std::string error;
  DepthMetrics depth;
  std::optional<double> ate;
  std::vector<double> trial_ates;
  std::uint64_t bank_fingerprint = 0;
};

/// Rows in value order. A failing value is recorded in its row and the sweep
/// continues.
std::vector<AblationRow> run_ablation(const AblationSpec& spec, const DatasetIndex& dataset,
                                      const PipelineConfig& base);

std::string format_ablation_table(const AblationSpec& spec, const std::vector<AblationRow>& rows);

}  // namespace aperture
