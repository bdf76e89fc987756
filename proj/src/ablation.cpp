#include "aperture/ablation.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include <spdlog/spdlog.h>

#include "aperture/error.hpp"
#include "aperture/io.hpp"
#include "aperture/pipeline.hpp"

namespace aperture {

AblationAxis parse_axis(const std::string& name) {
  if (name == "mask_size") return AblationAxis::mask_size;
  if (name == "focus_distance") return AblationAxis::focus_distance;
  throw InvalidArgument("unknown ablation axis '" + name + "' (mask_size, focus_distance)");
}

const char* axis_name(AblationAxis axis) {
  return axis == AblationAxis::mask_size ? "mask_size" : "focus_distance";
}

void AblationSpec::validate() const {
  if (values.empty()) throw InvalidArgument("ablation needs at least one value");
  std::set<double> seen;
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("ablation values must be finite");
    if (!seen.insert(v).second) throw InvalidArgument("duplicate ablation value " + io::format_double(v));
    if (axis == AblationAxis::mask_size && (v != std::floor(v) || v < 3))
      throw InvalidArgument("mask sizes must be integers >= 3, got " + io::format_double(v));
    if (axis == AblationAxis::focus_distance && !(v > 0.0))
      throw InvalidArgument("focus distances must be > 0");
  }
}

PipelineConfig ablation_config(const PipelineConfig& base, AblationAxis axis, double value) {
  PipelineConfig c = base;
  if (axis == AblationAxis::mask_size) {
    if (!base.mask.file.empty())
      throw InvalidConfiguration("mask.file: a mask-size sweep needs a Zernike mask, not a file");
    const int grid = static_cast<int>(value);
    c.mask.pitch = base.mask.grid * base.mask.pitch / grid;
    c.mask.grid = grid;
  } else {
    c.camera.focus_distance = value;
  }
  c.validate();
  return c;
}

std::vector<AblationRow> run_ablation(const AblationSpec& spec, const DatasetIndex& dataset,
                                      const PipelineConfig& base) {
  spec.validate();
  base.validate();
  std::vector<AblationRow> rows;
  for (double value : spec.values) {
    AblationRow row;
    row.value = value;
    try {
      const PipelineConfig config = ablation_config(base, spec.axis, value);
      const PsfBank bank = build_bank(config);
      row.bank_fingerprint = bank.fingerprint();
      const PipelineResult r = run_pipeline(dataset, config, bank);
      row.depth = r.depth;
      row.ate = r.ate;
      for (const auto& t : r.trials)
        if (t.ate) row.trial_ates.push_back(*t.ate);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
      spdlog::error("{}={}: {}", axis_name(spec.axis), io::format_double(value), e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation_table(const AblationSpec& spec, const std::vector<AblationRow>& rows) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-15s %-6s %9s %9s %9s %9s %9s %10s\n", axis_name(spec.axis),
                "status", "abs_rel", "rmse", "delta1", "l1", "l1<3m", "ate_m");
  out += buf;
  for (const auto& r : rows) {
    const std::string value = io::format_double(r.value);
    if (!r.ok) {
      std::snprintf(buf, sizeof buf, "%-15s %-6s %s\n", value.c_str(), "FAIL", r.error.c_str());
      out += buf;
      continue;
    }
    char l1u[32], ate[32];
    if (r.depth.l1_under_3m_defined) std::snprintf(l1u, sizeof l1u, "%9.4f", r.depth.l1_under_3m);
    else std::snprintf(l1u, sizeof l1u, "%9s", "-");
    if (r.ate) std::snprintf(ate, sizeof ate, "%10.6f", *r.ate);
    else std::snprintf(ate, sizeof ate, "%10s", "-");
    std::snprintf(buf, sizeof buf, "%-15s %-6s %9.4f %9.4f %9.4f %9.4f %s %s\n", value.c_str(), "ok",
                  r.depth.abs_rel, r.depth.rmse, r.depth.delta1, r.depth.l1, l1u, ate);
    out += buf;
  }
  return out;
}

}  // namespace aperture
