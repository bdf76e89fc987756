#include "aperture/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "aperture/error.hpp"
#include "aperture/eval.hpp"
#include "aperture/io.hpp"
#include "aperture/seed.hpp"

namespace aperture {
namespace {

std::string frame_name(std::size_t index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu%s", index, ext);
  return buf;
}

SceneFrame load_scene(const DatasetIndex& dataset, std::size_t i) {
  const auto& e = dataset.entries[i];
  SceneFrame f;
  f.rgb = load_rgb(e.rgb);
  f.depth = load_depth(e.depth, dataset.depth_scale);
  f.intrinsics = dataset.intrinsics;
  if (f.depth.width() != f.rgb.width() || f.depth.height() != f.rgb.height())
    throw InvalidArgument(e.depth.string() + ": depth size differs from " + e.rgb.string());
  return f;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::optional<Trajectory> ground_truth(const DatasetIndex& dataset, const PipelineConfig& config) {
  if (!dataset.ground_truth) return std::nullopt;
  return load_ground_truth(dataset, config.dataset.flip_gt_y);
}

}  // namespace

PhaseMask build_mask(const PipelineConfig& config) {
  if (!config.mask.file.empty()) {
    PhaseMask m = io::read_mask(config.mask.file);
    m.refractive_index = config.mask.refractive_index;
    return m;
  }
  const auto coeffs = config.mask.zernike.empty() ? default_mask_coefficients() : config.mask.zernike;
  PhaseMask m = make_zernike_mask(coeffs, config.mask.grid, config.mask.pitch);
  m.refractive_index = config.mask.refractive_index;
  return m;
}

PsfBank build_bank(const PipelineConfig& config, Exec exec) {
  const PhaseMask mask = build_mask(config);
  return build_psf_bank(mask, make_circular_aperture(mask, config.camera), config.camera,
                        config.depth_bins().centers, exec);
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return derive_seed(seed, static_cast<std::uint64_t>(trial));
}

CodedFrame code_frame(const SceneFrame& frame, const DepthBins& bins, const PsfBank& bank,
                      double noise_sigma, std::uint64_t noise_seed) {
  CodedFrame coded = render_coded(frame, quantize_depth(frame, bins), bank);
  if (noise_sigma > 0.0) coded = add_sensor_noise(coded, noise_sigma, noise_seed);
  return coded;
}

DepthMetrics pooled_depth_metrics(const std::vector<ImageD>& pred, const std::vector<ImageD>& gt,
                                  double max_depth) {
  if (pred.size() != gt.size() || pred.empty())
    throw InvalidArgument("pooled metrics need matching, nonempty frame lists");
  const int w = gt.front().width();
  int rows = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i].width() != w || pred[i].width() != w || pred[i].height() != gt[i].height())
      throw InvalidArgument("pooled metrics need frames of one size");
    rows += gt[i].height();
  }
  ImageD p(w, rows), g(w, rows);
  int y0 = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    std::copy(pred[i].data(), pred[i].data() + pred[i].size(), p.data() + static_cast<std::size_t>(y0) * w);
    std::copy(gt[i].data(), gt[i].data() + gt[i].size(), g.data() + static_cast<std::size_t>(y0) * w);
    y0 += gt[i].height();
  }
  return compute_depth_metrics(p, g, max_depth);
}

DepthMetrics median_depth_metrics(const std::vector<DepthMetrics>& metrics) {
  if (metrics.empty()) throw InvalidArgument("no metrics to aggregate");
  if (metrics.size() == 1) return metrics.front();
  auto field = [&](auto member) {
    std::vector<double> v;
    for (const auto& m : metrics) v.push_back(static_cast<double>(m.*member));
    return median(std::move(v));
  };
  DepthMetrics out;
  out.abs_rel = field(&DepthMetrics::abs_rel);
  out.rmse = field(&DepthMetrics::rmse);
  out.delta1 = field(&DepthMetrics::delta1);
  out.l1 = field(&DepthMetrics::l1);
  out.l1_under_3m_defined = metrics.front().l1_under_3m_defined;
  out.l1_under_3m = out.l1_under_3m_defined ? field(&DepthMetrics::l1_under_3m) : 0.0;
  out.valid_pixel_count = metrics.front().valid_pixel_count;
  return out;
}

PipelineResult run_pipeline(const DatasetIndex& dataset, const PipelineConfig& config,
                            const PsfBank& bank, const PipelineSinks& sinks) {
  config.validate();
  const DepthBins bins = config.depth_bins();
  require_matching_bins(bank, bins);
  const auto gt = ground_truth(dataset, config);
  const std::size_t n = dataset.entries.size();

  std::vector<SceneFrame> scenes;
  scenes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) scenes.push_back(load_scene(dataset, i));

  DepthEstimator estimator(bank, bins, config.estimator);
  PipelineResult result;
  result.bank_fingerprint = bank.fingerprint();
  std::vector<std::pair<double, std::string>> coded_rows, depth_rows;

  for (int trial = 0; trial < config.eval.trials; ++trial) {
    TrialResult tr;
    tr.seed = trial_seed(config.seed, trial);
    const bool save = trial == 0;
    std::vector<OdometryFrame> frames;
    std::vector<ImageD> preds, truths;
    for (std::size_t i = 0; i < n; ++i) {
      const CodedFrame coded =
          code_frame(scenes[i], bins, bank, config.render.noise_sigma, derive_seed(tr.seed, i));
      DepthEstimate est = estimator.estimate(coded);
      const double ts = dataset.entries[i].timestamp;
      if (save && sinks.coded_dir) {
        io::write_png_rgb(*sinks.coded_dir / "rgb" / frame_name(i, ".png"), coded.rgb, 16);
        if (sinks.float_maps) io::write_pfm(*sinks.coded_dir / "rgb" / frame_name(i, ".pfm"), coded.rgb);
        coded_rows.emplace_back(ts, "rgb/" + frame_name(i, ".png"));
      }
      if (save && sinks.depth_dir) {
        io::write_depth_png(*sinks.depth_dir / "depth" / frame_name(i, ".png"), est.depth,
                            dataset.depth_scale);
        io::write_pfm(*sinks.depth_dir / "depth" / frame_name(i, ".pfm"), est.depth);
        depth_rows.emplace_back(ts, "depth/" + frame_name(i, ".png"));
      }
      preds.push_back(est.depth);
      truths.push_back(scenes[i].depth);
      frames.push_back({coded.rgb, std::move(est.depth), ts});
    }
    tr.depth = pooled_depth_metrics(preds, truths, config.eval.max_depth);
    VoConfig vo = config.vo_config();
    vo.seed = tr.seed;
    tr.trajectory = run_odometry(frames, dataset.intrinsics, vo, &tr.stats);
    if (gt) tr.ate = evaluate_ate(tr.trajectory, *gt, config.eval.max_dt, config.eval.with_scale).ate();
    spdlog::info("trial {}: delta1 {:.4f}, abs_rel {:.4f}{}", trial, tr.depth.delta1, tr.depth.abs_rel,
                 tr.ate ? fmt::format(", ATE {:.6f} m", *tr.ate) : std::string());
    result.trials.push_back(std::move(tr));
  }
  if (sinks.coded_dir) write_listing(*sinks.coded_dir / "rgb.txt", coded_rows);
  if (sinks.depth_dir) write_listing(*sinks.depth_dir / "depth.txt", depth_rows);

  std::vector<DepthMetrics> dm;
  std::vector<double> ates;
  for (const auto& t : result.trials) {
    dm.push_back(t.depth);
    if (t.ate) ates.push_back(*t.ate);
  }
  result.depth = median_depth_metrics(dm);
  if (!ates.empty()) result.ate = median(ates);
  return result;
}

std::vector<fs::path> render_dataset(const DatasetIndex& dataset, const PipelineConfig& config,
                                     const PsfBank& bank, const fs::path& out, bool float_maps) {
  config.validate();
  const DepthBins bins = config.depth_bins();
  require_matching_bins(bank, bins);
  const std::uint64_t seed = trial_seed(config.seed, 0);
  std::vector<fs::path> written;
  std::vector<std::pair<double, std::string>> rgb_rows, depth_rows;
  for (std::size_t i = 0; i < dataset.entries.size(); ++i) {
    const auto& e = dataset.entries[i];
    const SceneFrame scene = load_scene(dataset, i);
    const CodedFrame coded = code_frame(scene, bins, bank, config.render.noise_sigma, derive_seed(seed, i));
    const std::string png = "rgb/" + frame_name(i, ".png");
    const std::string pfm = "rgb/" + frame_name(i, ".pfm");
    const std::string depth = "depth/" + frame_name(i, e.depth.extension() == ".pfm" ? ".pfm" : ".png");
    io::write_png_rgb(out / png, coded.rgb, 16);
    written.push_back(out / png);
    if (float_maps) {
      io::write_pfm(out / pfm, coded.rgb);
      written.push_back(out / pfm);
    }
    io::write_file_atomic(out / depth, io::read_file(e.depth));
    rgb_rows.emplace_back(e.timestamp, float_maps ? pfm : png);
    depth_rows.emplace_back(e.timestamp, depth);
    written.push_back(out / depth);
  }
  write_listing(out / "rgb.txt", rgb_rows);
  write_listing(out / "depth.txt", depth_rows);
  io::write_intrinsics(out / "intrinsics.txt", {dataset.intrinsics, dataset.depth_scale});
  written.push_back(out / "rgb.txt");
  written.push_back(out / "depth.txt");
  written.push_back(out / "intrinsics.txt");
  if (dataset.ground_truth) {
    io::write_file_atomic(out / "groundtruth.txt", io::read_file(*dataset.ground_truth));
    written.push_back(out / "groundtruth.txt");
  }
  return written;
}

DepthStageResult estimate_dataset(const DatasetIndex& coded, const PipelineConfig& config,
                                  const PsfBank& bank, const fs::path& out) {
  config.validate();
  const DepthBins bins = config.depth_bins();
  require_matching_bins(bank, bins);
  DepthEstimator estimator(bank, bins, config.estimator);
  DepthStageResult result;
  std::vector<ImageD> preds, truths;
  std::vector<std::pair<double, std::string>> rows;
  for (std::size_t i = 0; i < coded.entries.size(); ++i) {
    const auto& e = coded.entries[i];
    CodedFrame frame;
    frame.rgb = load_rgb(e.rgb);
    frame.bank_fingerprint = bank.fingerprint();
    DepthEstimate est = estimator.estimate(frame);
    const std::string rel = "depth/" + frame_name(i, ".png");
    const std::string pfm = "depth/" + frame_name(i, ".pfm");
    io::write_depth_png(out / rel, est.depth, coded.depth_scale);
    io::write_pfm(out / pfm, est.depth);
    rows.emplace_back(e.timestamp, rel);
    result.written.push_back(out / rel);
    result.written.push_back(out / pfm);
    truths.push_back(load_depth(e.depth, coded.depth_scale));
    preds.push_back(std::move(est.depth));
  }
  write_listing(out / "depth.txt", rows);
  result.written.push_back(out / "depth.txt");
  result.metrics = pooled_depth_metrics(preds, truths, config.eval.max_depth);
  return result;
}

Trajectory odometry_on_dataset(const DatasetIndex& coded, const std::optional<fs::path>& depth_dir,
                               const PipelineConfig& config, std::vector<FrameStats>* stats) {
  config.validate();
  std::vector<fs::path> depth_paths;
  for (const auto& e : coded.entries) depth_paths.push_back(e.depth);
  if (depth_dir) {
    // Estimated depth is matched to the coded frames by timestamp.
    const fs::path listing = *depth_dir / "depth.txt";
    if (!fs::exists(listing)) throw LoadError("missing file: " + listing.string());
    std::map<double, fs::path> by_time;
    std::istringstream in(io::read_file(listing));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream fields(line);
      std::string ts, rel;
      if (!(fields >> ts >> rel)) continue;
      by_time[io::parse_double(ts)] = *depth_dir / rel;
    }
    for (std::size_t i = 0; i < coded.entries.size(); ++i) {
      const auto it = by_time.find(coded.entries[i].timestamp);
      if (it == by_time.end())
        throw LoadError(listing.string() + ": no depth for t=" + io::format_double(coded.entries[i].timestamp));
      if (!fs::exists(it->second)) throw LoadError("missing file: " + it->second.string());
      depth_paths[i] = it->second;
    }
  }
  std::vector<OdometryFrame> frames;
  for (std::size_t i = 0; i < coded.entries.size(); ++i)
    frames.push_back({load_rgb(coded.entries[i].rgb), load_depth(depth_paths[i], coded.depth_scale),
                      coded.entries[i].timestamp});
  VoConfig vo = config.vo_config();
  vo.seed = trial_seed(config.seed, 0);
  return run_odometry(frames, coded.intrinsics, vo, stats);
}

std::vector<fs::path> write_sequence(const fs::path& root, const synthetic::Sequence& sequence,
                                     double depth_scale) {
  std::vector<fs::path> written;
  std::vector<std::pair<double, std::string>> rgb_rows, depth_rows;
  for (std::size_t i = 0; i < sequence.frames.size(); ++i) {
    const double ts = sequence.ground_truth.poses.at(i).timestamp;
    const std::string rgb = "rgb/" + frame_name(i, ".png");
    const std::string depth = "depth/" + frame_name(i, ".png");
    io::write_png_rgb(root / rgb, sequence.frames[i].rgb, 16);
    io::write_depth_png(root / depth, sequence.frames[i].depth, depth_scale);
    rgb_rows.emplace_back(ts, rgb);
    depth_rows.emplace_back(ts, depth);
    written.push_back(root / rgb);
    written.push_back(root / depth);
  }
  write_listing(root / "rgb.txt", rgb_rows);
  write_listing(root / "depth.txt", depth_rows);
  io::write_intrinsics(root / "intrinsics.txt", {sequence.intrinsics, depth_scale});
  io::write_trajectory(root / "groundtruth.txt", sequence.ground_truth);
  for (const char* f : {"rgb.txt", "depth.txt", "intrinsics.txt", "groundtruth.txt"})
    written.push_back(root / f);
  return written;
}

}  // namespace aperture
