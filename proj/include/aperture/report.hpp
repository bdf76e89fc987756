#pragma once

// JSON reports and run manifests. A manifest records the command, its
// arguments, the full config snapshot, seeds and SHA-256 digests of inputs and
// outputs; reloading its config reproduces the run.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aperture/ablation.hpp"
#include "aperture/config.hpp"
#include "aperture/depth.hpp"
#include "aperture/pipeline.hpp"

namespace aperture {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct FileDigest {
  std::string path;
  std::string sha256;
  bool operator==(const FileDigest&) const = default;
};

std::vector<FileDigest> digest_files(const std::vector<std::filesystem::path>& paths);

struct Manifest {
  std::string command;
  std::map<std::string, std::string> arguments;
  PipelineConfig config;
  std::vector<std::uint64_t> trial_seeds;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
};

nlohmann::json to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& json);

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
/// Throws LoadError / SyntaxError / InvalidConfiguration.
Manifest read_manifest(const std::filesystem::path& path);

nlohmann::json to_json(const DepthMetrics& metrics);
/// Flat key=value report: one metric per line, l1_under_3m=nan when undefined,
/// ate_m appended when given.
std::string format_metrics_text(const DepthMetrics& metrics, std::optional<double> ate_m = std::nullopt);
nlohmann::json to_json(const PipelineResult& result);
nlohmann::json to_json(const AblationSpec& spec, const std::vector<AblationRow>& rows);

/// Pretty-printed JSON with a trailing newline, written atomically.
void write_json(const std::filesystem::path& path, const nlohmann::json& json);

}  // namespace aperture
