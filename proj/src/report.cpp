#include "aperture/report.hpp"

#include "aperture/error.hpp"
#include "aperture/io.hpp"

namespace aperture {

using nlohmann::json;

std::vector<FileDigest> digest_files(const std::vector<std::filesystem::path>& paths) {
  std::vector<FileDigest> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back({p.generic_string(), io::sha256_file(p)});
  return out;
}

json to_json(const Manifest& m) {
  json config = json::object();
  for (const auto& key : config_keys()) config[key] = get_config_value(m.config, key);
  auto digests = [](const std::vector<FileDigest>& files) {
    json a = json::array();
    for (const auto& f : files) a.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return a;
  };
  return {{"tool", "aperture"},
          {"version", kToolkitVersion},
          {"command", m.command},
          {"arguments", m.arguments},
          {"config", config},
          {"seeds", {{"seed", m.config.seed}, {"trials", m.trial_seeds}}},
          {"inputs", digests(m.inputs)},
          {"outputs", digests(m.outputs)}};
}

Manifest manifest_from_json(const json& j) {
  try {
    Manifest m;
    m.command = j.at("command").get<std::string>();
    m.arguments = j.at("arguments").get<std::map<std::string, std::string>>();
    for (const auto& [key, value] : j.at("config").items())
      set_config_value(m.config, key, value.get<std::string>());
    m.config.validate();
    m.trial_seeds = j.at("seeds").at("trials").get<std::vector<std::uint64_t>>();
    for (const auto& f : j.at("inputs")) m.inputs.push_back({f.at("path"), f.at("sha256")});
    for (const auto& f : j.at("outputs")) m.outputs.push_back({f.at("path"), f.at("sha256")});
    return m;
  } catch (const json::exception& e) {
    throw SyntaxError(std::string("malformed manifest: ") + e.what(), 0);
  }
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  write_json(path, to_json(manifest));
}

Manifest read_manifest(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SyntaxError(path.string() + ": " + e.what(), 0);
  }
  return manifest_from_json(j);
}

json to_json(const DepthMetrics& m) {
  json j = {{"abs_rel", m.abs_rel},
            {"rmse", m.rmse},
            {"delta1", m.delta1},
            {"l1", m.l1},
            {"valid_pixels", m.valid_pixel_count}};
  j["l1_under_3m"] = m.l1_under_3m_defined ? json(m.l1_under_3m) : json(nullptr);
  return j;
}

std::string format_metrics_text(const DepthMetrics& m, std::optional<double> ate_m) {
  std::string out;
  const auto line = [&out](const char* key, double v) { out += std::string(key) + "=" + io::format_double(v) + "\n"; };
  line("abs_rel", m.abs_rel);
  line("rmse", m.rmse);
  line("delta1", m.delta1);
  line("l1", m.l1);
  out += "l1_under_3m=" + (m.l1_under_3m_defined ? io::format_double(m.l1_under_3m) : std::string("nan")) + "\n";
  out += "valid_pixels=" + std::to_string(m.valid_pixel_count) + "\n";
  if (ate_m) line("ate_m", *ate_m);
  return out;
}

json to_json(const PipelineResult& r) {
  json trials = json::array();
  for (const auto& t : r.trials) {
    int fallbacks = 0;
    for (const auto& s : t.stats) fallbacks += s.fallback ? 1 : 0;
    trials.push_back({{"seed", t.seed},
                      {"depth", to_json(t.depth)},
                      {"ate_m", t.ate ? json(*t.ate) : json(nullptr)},
                      {"frames", t.trajectory.size()},
                      {"fallback_frames", fallbacks}});
  }
  return {{"depth", to_json(r.depth)},
          {"ate_m", r.ate ? json(*r.ate) : json(nullptr)},
          {"bank_fingerprint", r.bank_fingerprint},
          {"trials", trials}};
}

json to_json(const AblationSpec& spec, const std::vector<AblationRow>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    json row = {{"value", r.value}, {"ok", r.ok}};
    if (r.ok) {
      row["depth"] = to_json(r.depth);
      row["ate_m"] = r.ate ? json(*r.ate) : json(nullptr);
      row["trial_ates_m"] = r.trial_ates;
      row["bank_fingerprint"] = r.bank_fingerprint;
    } else {
      row["error"] = r.error;
    }
    a.push_back(row);
  }
  return {{"axis", axis_name(spec.axis)}, {"rows", a}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  io::write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace aperture
