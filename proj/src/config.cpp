#include "aperture/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "aperture/io.hpp"

namespace aperture {
namespace {

struct Field {
  std::string key;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

double to_double(std::string_view v) { return io::parse_double(v); }

int to_int(std::string_view v) {
  const long long n = io::parse_int(v);
  if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max())
    throw SyntaxError("integer out of range: '" + std::string(v) + "'", 0);
  return static_cast<int>(n);
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw SyntaxError("not a boolean: '" + std::string(v) + "'", 0);
}

std::vector<double> to_list(std::string_view v) {
  std::vector<double> out;
  if (v.find_first_not_of(" \t") == std::string_view::npos) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    out.push_back(to_double(v.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string from_list(const auto& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + io::format_double(values[i]);
  return out;
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

#define APERTURE_DOUBLE(name, member)                                                       \
  Field {                                                                                  \
    name, [](PipelineConfig& c, std::string_view v) { c.member = to_double(v); },          \
        [](const PipelineConfig& c) { return io::format_double(c.member); }                \
  }
#define APERTURE_INT(name, member)                                                          \
  Field {                                                                                  \
    name, [](PipelineConfig& c, std::string_view v) { c.member = to_int(v); },             \
        [](const PipelineConfig& c) { return std::to_string(c.member); }                   \
  }
#define APERTURE_BOOL(name, member)                                                         \
  Field {                                                                                  \
    name, [](PipelineConfig& c, std::string_view v) { c.member = to_bool(v); },            \
        [](const PipelineConfig& c) { return from_bool(c.member); }                        \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      APERTURE_DOUBLE("camera.focal_length", camera.focal_length),
      APERTURE_DOUBLE("camera.f_number", camera.f_number),
      APERTURE_DOUBLE("camera.focus_distance", camera.focus_distance),
      APERTURE_DOUBLE("camera.pixel_pitch", camera.pixel_pitch),
      APERTURE_INT("camera.sensor_width", camera.sensor_width),
      APERTURE_INT("camera.sensor_height", camera.sensor_height),
      Field{"camera.wavelengths",
            [](PipelineConfig& c, std::string_view v) {
              const auto w = to_list(v);
              if (w.size() != kChannels) throw SyntaxError("expected 3 comma-separated wavelengths", 0);
              std::copy(w.begin(), w.end(), c.camera.wavelengths.begin());
            },
            [](const PipelineConfig& c) { return from_list(c.camera.wavelengths); }},
      APERTURE_INT("camera.pupil_samples", camera.pupil_samples),
      APERTURE_INT("camera.psf_crop", camera.psf_crop),
      APERTURE_INT("camera.oversample", camera.oversample),
      Field{"mask.file", [](PipelineConfig& c, std::string_view v) { c.mask.file = std::string(v); },
            [](const PipelineConfig& c) { return c.mask.file; }},
      APERTURE_INT("mask.grid", mask.grid),
      APERTURE_DOUBLE("mask.pitch", mask.pitch),
      Field{"mask.zernike", [](PipelineConfig& c, std::string_view v) { c.mask.zernike = to_list(v); },
            [](const PipelineConfig& c) { return from_list(c.mask.zernike); }},
      APERTURE_DOUBLE("mask.refractive_a", mask.refractive_index.a),
      APERTURE_DOUBLE("mask.refractive_b", mask.refractive_index.b),
      APERTURE_INT("bins.count", bins.count),
      APERTURE_DOUBLE("bins.near", bins.near),
      APERTURE_DOUBLE("bins.far", bins.far),
      Field{"bins.spacing",
            [](PipelineConfig& c, std::string_view v) {
              if (v == "inverse_depth") c.bins.spacing = BinSpacing::inverse_depth;
              else if (v == "linear") c.bins.spacing = BinSpacing::linear;
              else throw SyntaxError("expected inverse_depth or linear", 0);
            },
            [](const PipelineConfig& c) {
              return std::string(c.bins.spacing == BinSpacing::linear ? "linear" : "inverse_depth");
            }},
      APERTURE_INT("estimator.window", estimator.window),
      APERTURE_DOUBLE("estimator.snr_param", estimator.snr_param),
      APERTURE_DOUBLE("estimator.snr_span", estimator.snr_span),
      APERTURE_INT("estimator.snr_steps", estimator.snr_steps),
      APERTURE_BOOL("estimator.shiftable_windows", estimator.shiftable_windows),
      APERTURE_INT("vo.pyramid_levels", vo.pyramid_levels),
      APERTURE_DOUBLE("vo.scale_factor", vo.scale_factor),
      APERTURE_INT("vo.max_features", vo.max_features),
      APERTURE_DOUBLE("vo.depth_gate", vo.depth_gate),
      APERTURE_INT("vo.ransac_iterations", vo.ransac_iterations),
      APERTURE_DOUBLE("vo.inlier_threshold", vo.inlier_threshold),
      APERTURE_DOUBLE("vo.unsharp_amount", vo.unsharp_amount),
      APERTURE_DOUBLE("vo.unsharp_radius", vo.unsharp_radius),
      APERTURE_INT("vo.min_inliers", vo.min_inliers),
      APERTURE_DOUBLE("eval.max_dt", eval.max_dt),
      APERTURE_INT("eval.trials", eval.trials),
      APERTURE_BOOL("eval.with_scale", eval.with_scale),
      APERTURE_DOUBLE("eval.max_depth", eval.max_depth),
      APERTURE_DOUBLE("render.noise_sigma", render.noise_sigma),
      APERTURE_DOUBLE("dataset.depth_scale", dataset.depth_scale),
      Field{"dataset.layout",
            [](PipelineConfig& c, std::string_view v) {
              if (v != "auto" && v != "tum" && v != "icl") throw SyntaxError("expected auto, tum or icl", 0);
              c.dataset.layout = std::string(v);
            },
            [](const PipelineConfig& c) { return c.dataset.layout; }},
      APERTURE_BOOL("dataset.flip_gt_y", dataset.flip_gt_y),
      Field{"seed",
            [](PipelineConfig& c, std::string_view v) {
              const long long n = io::parse_int(v);
              if (n < 0) throw SyntaxError("seed must be a non-negative integer", 0);
              c.seed = static_cast<std::uint64_t>(n);
            },
            [](const PipelineConfig& c) { return std::to_string(c.seed); }},
  };
  return table;
}

#undef APERTURE_DOUBLE
#undef APERTURE_INT
#undef APERTURE_BOOL

const Field* find_field(std::string_view key) {
  for (const Field& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

void require_finite(const PipelineConfig& c) {
  for (const Field& f : fields()) {
    const std::string v = f.get(c);
    if (v.find("inf") != std::string::npos || v.find("nan") != std::string::npos)
      throw InvalidConfiguration(f.key + " must be finite");
  }
}

}  // namespace

void PipelineConfig::validate() const {
  require_finite(*this);
  camera.validate();
  if (mask.file.empty()) {
    if (mask.grid < 3) throw InvalidConfiguration("mask.grid must be >= 3");
    if (!(mask.pitch > 0.0)) throw InvalidConfiguration("mask.pitch must be > 0");
    if (mask.zernike.size() > 66) throw InvalidConfiguration("mask.zernike holds at most 66 terms");
  }
  if (!(mask.refractive_index.a >= 1.0))
    throw InvalidConfiguration("mask.refractive_a must be >= 1");
  if (bins.count < 1) throw InvalidConfiguration("bins.count must be >= 1");
  if (!(bins.near > 0.0)) throw InvalidConfiguration("bins.near must be > 0");
  if (!(bins.far > bins.near)) throw InvalidConfiguration("bins.far must exceed bins.near");
  estimator.validate();
  vo_config().validate();
  if (!(eval.max_dt >= 0.0)) throw InvalidConfiguration("eval.max_dt must be >= 0");
  if (eval.trials < 1) throw InvalidConfiguration("eval.trials must be >= 1");
  if (!(eval.max_depth > 0.0)) throw InvalidConfiguration("eval.max_depth must be > 0");
  if (!(render.noise_sigma >= 0.0)) throw InvalidConfiguration("render.noise_sigma must be >= 0");
  if (!(dataset.depth_scale > 0.0)) throw InvalidConfiguration("dataset.depth_scale must be > 0");
}

VoConfig PipelineConfig::vo_config() const {
  VoConfig v = vo;
  v.seed = seed;
  return v;
}

DepthBins PipelineConfig::depth_bins() const {
  return make_depth_bins(bins.count, bins.near, bins.far, bins.spacing);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Field& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (f == nullptr) throw InvalidConfiguration("unknown configuration key '" + std::string(key) + "'");
  try {
    f->set(config, value);
  } catch (const SyntaxError& e) {
    throw SyntaxError(std::string(key) + ": " + e.what(), 0);
  }
}

std::string get_config_value(const PipelineConfig& config, std::string_view key) {
  const Field* f = find_field(key);
  if (f == nullptr) throw InvalidConfiguration("unknown configuration key '" + std::string(key) + "'");
  return f->get(config);
}

PipelineConfig parse_config_text(std::string_view text, const std::string& origin) {
  std::vector<io::KeyValue> entries;
  try {
    entries = io::parse_key_values(text);
  } catch (const SyntaxError& e) {
    throw SyntaxError(origin + ": " + e.what(), e.line());
  }
  std::vector<std::string> unknown;
  for (const auto& kv : entries)
    if (find_field(kv.key) == nullptr) unknown.push_back(kv.key);
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw InvalidConfiguration(origin + ": unknown configuration keys: " + list);
  }
  PipelineConfig config;
  for (const auto& kv : entries) {
    try {
      find_field(kv.key)->set(config, kv.value);
    } catch (const SyntaxError& e) {
      throw SyntaxError(origin + ":" + std::to_string(kv.line) + ": " + kv.key + ": " + e.what(),
                        kv.line);
    }
  }
  try {
    config.validate();
  } catch (const ValidationError& e) {
    throw InvalidConfiguration(origin + ": " + e.what());
  }
  return config;
}

PipelineConfig parse_config(const std::filesystem::path& path) {
  return parse_config_text(io::read_file(path), path.string());
}

std::string format_config(const PipelineConfig& config) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string s = dot == std::string::npos ? "" : f.key.substr(0, dot);
    if (s != section) {
      if (!out.empty()) out += '\n';
      section = s;
    }
    out += f.key + "=" + f.get(config) + "\n";
  }
  return out;
}

}  // namespace aperture
