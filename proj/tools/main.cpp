// aperture: command-line front end.
//
//   aperture [--config FILE | --manifest FILE] [--section.key=value ...] <command> ...
//
// Exit status: 0 success, 2 invalid input or configuration, 1 runtime failure.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "aperture/ablation.hpp"
#include "aperture/config.hpp"
#include "aperture/dataset.hpp"
#include "aperture/error.hpp"
#include "aperture/eval.hpp"
#include "aperture/io.hpp"
#include "aperture/pipeline.hpp"
#include "aperture/report.hpp"
#include "aperture/synthetic.hpp"

namespace fs = std::filesystem;
using namespace aperture;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitInvalid = 2;

struct Overrides {
  std::vector<std::pair<std::string, std::string>> values;
  std::vector<std::string> rest;  // argv with the overrides removed
};

// Pulls "--section.key=value" and "--section.key value" out of argv. Anything
// with a dot after "--" is treated as a config key so typos are reported
// rather than passed on to the option parser.
Overrides split_overrides(int argc, char** argv) {
  Overrides o;
  o.rest.push_back(argv[0]);
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--") {
      for (; i < argc; ++i) o.rest.push_back(argv[i]);
      break;
    }
    const auto eq = a.find('=');
    const std::string name = a.substr(0, eq);
    const bool is_key = name.rfind("--", 0) == 0 &&
                        (name.find('.') != std::string::npos || name == "--seed");
    if (!is_key) {
      o.rest.push_back(a);
      continue;
    }
    std::string value;
    if (eq != std::string::npos) {
      value = a.substr(eq + 1);
    } else {
      if (i + 1 >= argc) throw InvalidArgument(name + " needs a value");
      value = argv[++i];
    }
    o.values.emplace_back(name.substr(2), value);
  }
  return o;
}

struct Context {
  std::string config_path;
  std::string manifest_path;
  Overrides overrides;
  PipelineConfig config;
  std::vector<fs::path> config_inputs;

  void resolve() {
    if (!config_path.empty() && !manifest_path.empty())
      throw InvalidArgument("--config and --manifest are mutually exclusive");
    if (!manifest_path.empty()) {
      config = read_manifest(manifest_path).config;
      config_inputs.push_back(manifest_path);
    } else {
      std::string path = config_path;
      if (path.empty())
        if (const char* env = std::getenv(kConfigEnvVar)) path = env;
      if (!path.empty()) {
        config = parse_config(path);
        config_inputs.push_back(path);
      }
    }
    std::vector<std::string> unknown;
    for (const auto& [key, value] : overrides.values) {
      const auto& keys = config_keys();
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) unknown.push_back(key);
    }
    if (!unknown.empty()) {
      std::string list;
      for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
      throw InvalidConfiguration("unknown configuration keys: " + list);
    }
    for (const auto& [key, value] : overrides.values) set_config_value(config, key, value);
    config.validate();
    if (!config.mask.file.empty()) config_inputs.push_back(config.mask.file);
  }

  Manifest manifest(const std::string& command, std::map<std::string, std::string> args,
                    std::vector<fs::path> inputs, const std::vector<fs::path>& outputs) const {
    Manifest m;
    m.command = command;
    m.arguments = std::move(args);
    m.config = config;
    for (int t = 0; t < config.eval.trials; ++t) m.trial_seeds.push_back(trial_seed(config.seed, t));
    inputs.insert(inputs.begin(), config_inputs.begin(), config_inputs.end());
    m.inputs = digest_files(inputs);
    m.outputs = digest_files(outputs);
    return m;
  }
};

DatasetIndex open_dataset(const std::string& root, const PipelineConfig& config) {
  DatasetOptions opt;
  opt.layout = parse_layout(config.dataset.layout);
  opt.depth_scale = config.dataset.depth_scale;
  DatasetIndex index = load_dataset(root, opt);
  spdlog::info("{}: {} frames", root, index.entries.size());
  return index;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    out.push_back(io::parse_double(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void print_metrics(const DepthMetrics& m) {
  std::printf("abs_rel %.6f  rmse %.6f  delta1 %.6f  l1 %.6f", m.abs_rel, m.rmse, m.delta1, m.l1);
  if (m.l1_under_3m_defined) std::printf("  l1<3m %.6f", m.l1_under_3m);
  std::printf("  (%lld px)\n", static_cast<long long>(m.valid_pixel_count));
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("aperture"));
  spdlog::set_pattern("[%l] %v");

  Context ctx;
  CLI::App app{"Coded-aperture depth and RGB-D odometry toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);
  app.add_option("--config", ctx.config_path,
                 std::string("key=value config file (default: $") + kConfigEnvVar + ")");
  app.add_option("--manifest", ctx.manifest_path, "reuse the configuration recorded in a run manifest");
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.footer("Any configuration key can be overridden as --section.key=value, e.g. --camera.focus_distance=2.5");

  // psf
  std::string psf_out;
  auto* psf = app.add_subcommand("psf", "build a PSF bank and export it");
  psf->add_option("--out", psf_out, "output folder")->required();

  // synth
  std::string synth_out;
  synthetic::SequenceSpec seq;
  auto* synth = app.add_subcommand("synth", "write a synthetic two-plane RGB-D sequence");
  synth->add_option("--out", synth_out, "output folder")->required();
  synth->add_option("--frames", seq.frames, "frame count")->capture_default_str();
  synth->add_option("--width", seq.width)->capture_default_str();
  synth->add_option("--height", seq.height)->capture_default_str();
  synth->add_option("--near-bin", seq.near_bin, "bin index of the near plane")->capture_default_str();
  synth->add_option("--far-bin", seq.far_bin, "bin index of the far plane")->capture_default_str();
  synth->add_option("--travel", seq.travel, "sideways travel, m")->capture_default_str();
  synth->add_option("--sway", seq.sway, "vertical sway amplitude, m")->capture_default_str();
  synth->add_option("--texture-seed", seq.seed)->capture_default_str();

  // render
  std::string render_in, render_out;
  auto* render = app.add_subcommand("render", "dataset -> coded frames");
  render->add_option("dataset", render_in, "dataset folder")->required();
  render->add_option("--out", render_out, "output folder")->required();
  bool render_float = false;
  render->add_flag("--float-maps", render_float, "also write linear float maps (rgb/*.pfm) and list them");

  // depth
  std::string depth_in, depth_out;
  auto* depth = app.add_subcommand("depth", "coded frames -> depth maps + metrics vs. dataset depth");
  depth->add_option("coded", depth_in, "coded dataset folder (from render)")->required();
  depth->add_option("--out", depth_out, "output folder")->required();

  // vo
  std::string vo_in, vo_depth, vo_out;
  auto* vo = app.add_subcommand("vo", "coded frames + depth -> TUM trajectory");
  vo->add_option("coded", vo_in, "coded dataset folder")->required();
  vo->add_option("--depth", vo_depth, "estimated depth folder (from depth); default: dataset depth");
  vo->add_option("--out", vo_out, "trajectory file")->required();

  // ate
  std::string ate_est, ate_gt, ate_out, ate_csv;
  auto* ate = app.add_subcommand("ate", "absolute trajectory error of two TUM trajectories");
  ate->add_option("estimate", ate_est)->required()->check(CLI::ExistingFile);
  ate->add_option("groundtruth", ate_gt)->required()->check(CLI::ExistingFile);
  ate->add_option("--out", ate_out, "folder for ate.json and the manifest");
  ate->add_option("--aligned-csv", ate_csv, "per-pose aligned positions for plotting");

  // pipeline
  std::string pipe_in, pipe_out;
  bool pipe_save = false;
  auto* pipe = app.add_subcommand("pipeline", "render -> depth -> vo -> ate in one pass");
  pipe->add_option("dataset", pipe_in, "dataset folder")->required();
  pipe->add_option("--out", pipe_out, "output folder")->required();
  pipe->add_flag("--save-frames", pipe_save, "also write coded frames and depth maps");
  bool pipe_float = false;
  pipe->add_flag("--float-maps", pipe_float, "with --save-frames, also write coded frames as float maps");

  // ablate
  std::string abl_in, abl_out, abl_axis, abl_values;
  auto* abl = app.add_subcommand("ablate", "sweep one parameter through the full pipeline");
  abl->add_option("dataset", abl_in, "dataset folder")->required();
  abl->add_option("--axis", abl_axis, "mask_size | focus_distance")->required();
  abl->add_option("--values", abl_values, "comma-separated values")->required();
  abl->add_option("--out", abl_out, "output folder for ablation.txt/json and the manifest");

  try {
    ctx.overrides = split_overrides(argc, argv);
    std::vector<const char*> rest;
    for (const auto& s : ctx.overrides.rest) rest.push_back(s.c_str());
    app.parse(static_cast<int>(rest.size()), const_cast<char**>(rest.data()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  spdlog::set_level(quiet ? spdlog::level::warn : verbose ? spdlog::level::debug : spdlog::level::info);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    ctx.resolve();
    const PipelineConfig& config = ctx.config;

    if (*psf) {
      const PhaseMask mask = build_mask(config);
      const PsfBank bank = build_psf_bank(mask, make_circular_aperture(mask, config.camera),
                                          config.camera, config.depth_bins().centers);
      io::write_psf_bank(psf_out, bank);
      io::write_mask(fs::path(psf_out) / "mask.txt", mask);
      io::write_bins(fs::path(psf_out) / "bins.txt", config.depth_bins());
      std::vector<fs::path> outputs{fs::path(psf_out) / "psf_index.txt", fs::path(psf_out) / "mask.txt",
                                    fs::path(psf_out) / "bins.txt"};
      write_manifest(fs::path(psf_out) / "manifest.json", ctx.manifest("psf", {{"out", psf_out}}, {}, outputs));
      std::printf("%zu bins x 3 channels, %dx%d kernels, fingerprint %016llx\n", bank.size(),
                  config.camera.psf_crop, config.camera.psf_crop,
                  static_cast<unsigned long long>(bank.fingerprint()));
    } else if (*synth) {
      const auto sequence = synthetic::two_plane_sequence(seq, config.depth_bins());
      const auto written = write_sequence(synth_out, sequence, config.dataset.depth_scale);
      write_manifest(fs::path(synth_out) / "manifest.json",
                     ctx.manifest("synth",
                                  {{"out", synth_out}, {"frames", std::to_string(seq.frames)},
                                   {"width", std::to_string(seq.width)}, {"height", std::to_string(seq.height)},
                                   {"near_bin", std::to_string(seq.near_bin)}, {"far_bin", std::to_string(seq.far_bin)},
                                   {"travel", io::format_double(seq.travel)}, {"sway", io::format_double(seq.sway)},
                                   {"texture_seed", std::to_string(seq.seed)}},
                                  {}, written));
      std::printf("%d frames %dx%d written to %s\n", seq.frames, seq.width, seq.height, synth_out.c_str());
    } else if (*render) {
      const DatasetIndex dataset = open_dataset(render_in, config);
      const PsfBank bank = build_bank(config);
      const auto written = render_dataset(dataset, config, bank, render_out, render_float);
      write_manifest(fs::path(render_out) / "manifest.json",
                     ctx.manifest("render", {{"dataset", render_in}, {"out", render_out}}, dataset.files(), written));
      std::printf("%zu coded frames written to %s\n", dataset.entries.size(), render_out.c_str());
    } else if (*depth) {
      const DatasetIndex coded = open_dataset(depth_in, config);
      const PsfBank bank = build_bank(config);
      auto result = estimate_dataset(coded, config, bank, depth_out);
      const fs::path report = fs::path(depth_out) / "metrics.json";
      write_json(report, {{"depth", to_json(result.metrics)}, {"frames", coded.entries.size()}});
      result.written.push_back(report);
      const fs::path text = fs::path(depth_out) / "metrics.txt";
      io::write_file_atomic(text, format_metrics_text(result.metrics));
      result.written.push_back(text);
      write_manifest(fs::path(depth_out) / "manifest.json",
                     ctx.manifest("depth", {{"coded", depth_in}, {"out", depth_out}}, coded.files(), result.written));
      print_metrics(result.metrics);
    } else if (*vo) {
      const DatasetIndex coded = open_dataset(vo_in, config);
      std::vector<FrameStats> stats;
      const Trajectory t = odometry_on_dataset(
          coded, vo_depth.empty() ? std::nullopt : std::optional<fs::path>(vo_depth), config, &stats);
      io::write_trajectory(vo_out, t);
      std::vector<fs::path> inputs = coded.files();
      if (!vo_depth.empty()) inputs.push_back(fs::path(vo_depth) / "depth.txt");
      const fs::path out(vo_out);
      write_manifest(out.parent_path() / (out.stem().string() + ".manifest.json"),
                     ctx.manifest("vo", {{"coded", vo_in}, {"depth", vo_depth}, {"out", vo_out}}, inputs, {out}));
      int fallbacks = 0;
      for (const auto& s : stats) fallbacks += s.fallback ? 1 : 0;
      std::printf("%zu poses written to %s (%d constant-velocity fallbacks)\n", t.size(), vo_out.c_str(), fallbacks);
    } else if (*ate) {
      const Trajectory est = io::read_trajectory(ate_est);
      Trajectory gt = io::read_trajectory(ate_gt);
      if (config.dataset.flip_gt_y) gt = flip_y_axis(gt);
      const AteReport r = evaluate_ate(est, gt, config.eval.max_dt, config.eval.with_scale);
      std::printf("%.6f\n", r.ate());
      std::vector<fs::path> outputs;
      if (!ate_csv.empty()) {
        std::string csv = "timestamp,est_x,est_y,est_z,gt_x,gt_y,gt_z\n";
        for (std::size_t i = 0; i < r.aligned.size(); ++i) {
          csv += io::format_double(r.timestamps[i]);
          for (int k = 0; k < 3; ++k) csv += "," + io::format_double(r.aligned[i][k]);
          for (int k = 0; k < 3; ++k) csv += "," + io::format_double(r.reference[i][k]);
          csv += "\n";
        }
        io::write_file_atomic(ate_csv, csv);
        outputs.push_back(ate_csv);
      }
      if (!ate_out.empty()) {
        const fs::path report = fs::path(ate_out) / "ate.json";
        write_json(report, {{"ate_m", r.ate()},
                            {"pairs", r.pairs.size()},
                            {"with_scale", config.eval.with_scale},
                            {"scale", r.alignment.scale}});
        outputs.push_back(report);
        write_manifest(fs::path(ate_out) / "manifest.json",
                       ctx.manifest("ate", {{"estimate", ate_est}, {"groundtruth", ate_gt}, {"out", ate_out}},
                                    {ate_est, ate_gt}, outputs));
      }
    } else if (*pipe) {
      const DatasetIndex dataset = open_dataset(pipe_in, config);
      const PsfBank bank = build_bank(config);
      PipelineSinks sinks;
      if (pipe_save) {
        sinks.coded_dir = fs::path(pipe_out) / "coded";
        sinks.depth_dir = fs::path(pipe_out) / "estimated";
        sinks.float_maps = pipe_float;
      }
      const PipelineResult result = run_pipeline(dataset, config, bank, sinks);
      const fs::path traj = fs::path(pipe_out) / "trajectory.txt";
      const fs::path report = fs::path(pipe_out) / "metrics.json";
      io::write_trajectory(traj, result.trials.front().trajectory);
      write_json(report, to_json(result));
      const fs::path text = fs::path(pipe_out) / "metrics.txt";
      io::write_file_atomic(text, format_metrics_text(result.depth, result.ate));
      std::vector<fs::path> outputs{traj, report, text};
      if (pipe_save) {
        outputs.push_back(*sinks.coded_dir / "rgb.txt");
        outputs.push_back(*sinks.depth_dir / "depth.txt");
      }
      write_manifest(fs::path(pipe_out) / "manifest.json",
                     ctx.manifest("pipeline", {{"dataset", pipe_in}, {"out", pipe_out}}, dataset.files(), outputs));
      print_metrics(result.depth);
      if (result.ate) std::printf("ATE %.6f m over %zu poses\n", *result.ate, result.trials.front().trajectory.size());
    } else if (*abl) {
      AblationSpec spec;
      spec.axis = parse_axis(abl_axis);
      spec.values = parse_values(abl_values);
      spec.validate();
      const DatasetIndex dataset = open_dataset(abl_in, config);
      const auto rows = run_ablation(spec, dataset, config);
      const std::string table = format_ablation_table(spec, rows);
      std::fputs(table.c_str(), stdout);
      if (!abl_out.empty()) {
        const fs::path txt = fs::path(abl_out) / "ablation.txt";
        const fs::path js = fs::path(abl_out) / "ablation.json";
        io::write_file_atomic(txt, table);
        write_json(js, to_json(spec, rows));
        write_manifest(fs::path(abl_out) / "manifest.json",
                       ctx.manifest("ablate", {{"dataset", abl_in}, {"axis", abl_axis}, {"values", abl_values}, {"out", abl_out}},
                                    dataset.files(), {txt, js}));
      }
      for (const auto& r : rows)
        if (!r.ok) return kExitRuntime;
    }
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
