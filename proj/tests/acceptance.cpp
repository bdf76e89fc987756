// Acceptance checks, one PASS/FAIL line per criterion with its runtime.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <sys/wait.h>

#include <json.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "aperture/config.hpp"
#include "aperture/dataset.hpp"
#include "aperture/depth.hpp"
#include "aperture/eval.hpp"
#include "aperture/geometry.hpp"
#include "aperture/io.hpp"
#include "aperture/pipeline.hpp"
#include "aperture/synthetic.hpp"
#include "common.hpp"

using namespace aperture;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "aperture_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

double center_energy(const ImageD& k, int radius) {
  const int c = k.width() / 2;
  double in = 0.0, all = 0.0;
  for (int y = 0; y < k.height(); ++y)
    for (int x = 0; x < k.width(); ++x) {
      all += k(x, y);
      if (std::abs(x - c) <= radius && std::abs(y - c) <= radius) in += k(x, y);
    }
  return in / all;
}

double interior_accuracy(const DepthEstimate& e, int bin, int margin) {
  int ok = 0, n = 0;
  for (int y = margin; y < e.bin.height() - margin; ++y)
    for (int x = margin; x < e.bin.width() - margin; ++x) {
      ++n;
      ok += e.bin(x, y) == bin;
    }
  return static_cast<double>(ok) / n;
}

Outcome psf_validity() {
  const PipelineConfig config;
  const PsfBank bank = build_bank(config);
  double min_value = INFINITY, worst_sum = 0.0;
  int count = 0;
  for (std::size_t b = 0; b < bank.size(); ++b)
    for (int c = 0; c < 3; ++c) {
      const ImageD& k = bank.kernel(b, c);
      double s = 0.0;
      for (double v : k.pixels()) min_value = std::min(min_value, v), s += v;
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      ++count;
    }
  const PhaseMask zero = make_zero_mask(config.mask.grid, config.mask.pitch);
  const ApertureAmplitude amp = make_circular_aperture(zero, config.camera);
  double focus_energy = 1.0;
  for (int c = 0; c < 3; ++c)
    focus_energy = std::min(focus_energy,
                            center_energy(simulate_psf(config.camera.focus_distance, c, zero, amp, config.camera).kernel, 2));
  return {count == 81 && min_value >= 0.0 && worst_sum <= 1e-6 && focus_energy >= 0.8,
          fmt::format("{} PSFs, min value {:.3g}, max |sum-1| {:.2g}, in-focus 5x5 energy {:.4f}", count,
                      min_value, worst_sum, focus_energy)};
}

Outcome single_layer_reduction() {
  const auto& o = aperture::testing::default_optics();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick(0, o.bins.count - 1);
  const int margin = o.camera.psf_crop / 2;
  double worst = 0.0;
  std::string bins;
  for (int t = 0; t < 3; ++t) {
    const int b = pick(rng);
    bins += (t ? "," : "") + std::to_string(b);
    SceneFrame f;
    f.rgb = synthetic::textured_image(320, 240, 40 + t);
    f.depth = ImageD(320, 240, o.bins.centers[static_cast<std::size_t>(b)]);
    const CodedFrame coded = render_coded(f, quantize_depth(f, o.bins), o.bank);
    for (int c = 0; c < 3; ++c) {
      const ImageD ref = aperture::testing::convolve_reference(f.rgb[c], o.bank.kernel(static_cast<std::size_t>(b), c));
      for (int y = margin; y < 240 - margin; ++y)
        for (int x = margin; x < 320 - margin; ++x) worst = std::max(worst, std::abs(ref(x, y) - coded.rgb[c](x, y)));
    }
  }
  return {worst <= 1e-6, fmt::format("bins {}, max interior difference {:.2g}", bins, worst)};
}

Outcome occlusion_oracle() {
  const auto& o = aperture::testing::default_optics();
  SceneFrame f;
  f.rgb = aperture::testing::uniform_color(64, 64, 11);
  f.depth = ImageD(64, 64, o.bins.centers[20]);
  for (int y = 14; y < 46; ++y)
    for (int x = 18; x < 50; ++x) f.depth(x, y) = o.bins.centers[4];
  const CodedFrame coded = render_coded(f, quantize_depth(f, o.bins), o.bank);
  const ColorImage ref = aperture::testing::composite_reference(f, o.bins, o.bank);
  double worst = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < ref[c].size(); ++i)
      worst = std::max(worst, std::abs(ref[c].data()[i] - coded.rgb[c].data()[i]));
  return {worst <= 1e-8, fmt::format("max difference {:.2g} over 64x64x3", worst)};
}

Outcome depth_round_trip() {
  const auto& o = aperture::testing::default_optics();
  DepthEstimator estimator(o.bank, o.bins);
  const int margin = o.camera.psf_crop / 2;
  double worst_clean = 1.0, worst_noisy = 1.0;
  for (int b : {2, 8, 13, 19, 25}) {
    SceneFrame f;
    f.rgb = synthetic::textured_image(320, 240, 500 + b);
    f.depth = ImageD(320, 240, o.bins.centers[static_cast<std::size_t>(b)]);
    const CodedFrame clean = render_coded(f, quantize_depth(f, o.bins), o.bank);
    worst_clean = std::min(worst_clean, interior_accuracy(estimator.estimate(clean), b, margin));
    const CodedFrame noisy = add_sensor_noise(clean, 0.005, 900 + b);
    worst_noisy = std::min(worst_noisy, interior_accuracy(estimator.estimate(noisy), b, margin));
  }
  return {worst_clean >= 0.99 && worst_noisy >= 0.90,
          fmt::format("bins 2,8,13,19,25: worst noiseless {:.4f}, worst sigma=0.005 {:.4f}", worst_clean,
                      worst_noisy)};
}

ImageD px(double v) { return ImageD(1, 1, v); }

Outcome loss_correctness() {
  const LossWeights w{2.0, 0.3};
  double worst = 0.0;
  const auto check = [&worst](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  check(l1_loss(px(1.5), px(1.0)), 0.5);
  check(l1_loss(px(0.25), px(4.0)), 3.75);
  check(depth_weighted_loss(px(2.0), px(1.0), w), std::pow(2.0, -0.3));
  check(depth_weighted_loss(px(2.0), px(1.0), w), 0.812252396356236);
  check(depth_weighted_loss(px(3.5), px(3.0), w), 0.25 * std::pow(2.0, -0.9));
  Image<std::uint8_t> valid(1, 1, 1);
  check(depth_weighted_loss(px(1.0), px(0.0), w, valid), 1.0);
  const ImageD p = aperture::testing::uniform_noise(9, 7, 1, 0.5, 6.0);
  const ImageD g = aperture::testing::uniform_noise(9, 7, 2, 0.5, 6.0);
  double mse = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) mse += (p.data()[i] - g.data()[i]) * (p.data()[i] - g.data()[i]);
  mse /= static_cast<double>(p.size());
  const bool exact = depth_weighted_loss(p, g, LossWeights{2.0, 0.0}) == mse;
  return {worst <= 1e-9 && exact,
          fmt::format("max error {:.2g} on hand cases, beta=0 equals MSE exactly: {}", worst, exact ? "yes" : "no")};
}

Outcome metric_correctness() {
  double worst = 0.0;
  const auto check = [&worst](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  ImageD g2(2, 1), p2(2, 1);
  g2(0, 0) = 1.0, g2(1, 0) = 4.0, p2(0, 0) = 1.2, p2(1, 0) = 4.0;
  const DepthMetrics a = compute_depth_metrics(p2, g2);
  check(a.delta1, 1.0);
  check(a.l1, 0.1);
  check(a.l1_under_3m, 0.2);
  check(a.abs_rel, 0.1);
  check(a.rmse, std::sqrt(0.02));
  const DepthMetrics same = compute_depth_metrics(g2, g2);
  check(same.abs_rel, 0.0);
  check(same.rmse, 0.0);
  check(same.l1, 0.0);
  check(same.delta1, 1.0);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.05, 8.0);
  bool in_range = true;
  for (int t = 0; t < 500; ++t) {
    ImageD p(6, 4), g(6, 4);
    for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = u(rng), g.data()[i] = u(rng);
    g(0, 0) = 1.0;
    const double d = compute_depth_metrics(p, g).delta1;
    in_range = in_range && d >= 0.0 && d <= 1.0;
  }
  return {worst <= 1e-12 && in_range,
          fmt::format("max fixture error {:.2g}, delta1 in [0,1] on 500 fuzzed cases: {}", worst, in_range ? "yes" : "no")};
}

Outcome pose_estimation() {
  double clean_r = 0.0, clean_t = 0.0, noisy_r = 0.0, noisy_t = 0.0;
  int failures = 0;
  const VoConfig config;
  for (std::uint64_t s = 0; s < 20; ++s) {
    for (double outliers : {0.0, 0.3}) {
      const auto p = aperture::testing::random_point_pairs(1000 + s, 100, outliers);
      try {
        const RelativePose r = estimate_relative_pose(p.prev, p.curr, config, s);
        const double er = rotation_angle(r.pose.rotation.transpose() * p.truth.rotation);
        const double et = (r.pose.translation - p.truth.translation).norm();
        double& wr = outliers > 0.0 ? noisy_r : clean_r;
        double& wt = outliers > 0.0 ? noisy_t : clean_t;
        wr = std::max(wr, er);
        wt = std::max(wt, et);
      } catch (const Error&) {
        ++failures;
      }
    }
  }
  return {failures == 0 && clean_r <= 1e-6 && clean_t <= 1e-6 && noisy_r <= 1e-3 && noisy_t <= 1e-3,
          fmt::format("20 seeds: noiseless {:.2g} rad / {:.2g} m, 30% outliers {:.2g} rad / {:.2g} m, {} failures",
                      clean_r, clean_t, noisy_r, noisy_t, failures)};
}

Outcome ate_oracle() {
  const auto bins = make_depth_bins(27, 0.5, 6.0);
  synthetic::SequenceSpec spec;
  spec.width = 32;
  spec.height = 24;
  const Trajectory gt = synthetic::two_plane_sequence(spec, bins).ground_truth;
  std::vector<Eigen::Vector3d> gpos;
  for (const auto& p : gt.poses) gpos.push_back(p.translation);

  const double same = compute_ate(gt, gt);
  std::mt19937_64 rng(8);
  Trajectory moved = gt, scaled = gt;
  const Eigen::Matrix3d r = aperture::testing::random_rotation(rng, 3.0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    moved.poses[i].translation = r * gt.poses[i].translation + Eigen::Vector3d(1.5, -2.0, 0.7);
    moved.poses[i].rotation = r * gt.poses[i].rotation;
    scaled.poses[i].translation = 2.0 * gt.poses[i].translation;
  }
  const double moved_ate = compute_ate(moved, gt);
  const double scaled_ate = compute_ate(scaled, gt);
  double worst = 0.0;
  for (std::size_t k = 0; k < gt.size(); k += 3) {
    Trajectory bumped = gt;
    bumped.poses[k].translation += Eigen::Vector3d(0.05, -0.03, 0.02);
    std::vector<Eigen::Vector3d> bpos = gpos;
    bpos[k] = bumped.poses[k].translation;
    worst = std::max(worst, std::abs(compute_ate(bumped, gt) - aperture::testing::horn_rmse(bpos, gpos)));
  }
  return {same <= 1e-12 && moved_ate < 1e-9 && scaled_ate > 0.0 && worst <= 1e-9,
          fmt::format("identical {:.2g}, transformed {:.2g}, scaled x2 {:.4f}, displaced-pose max |diff| {:.2g}", same,
                      moved_ate, scaled_ate, worst)};
}

Outcome end_to_end_odometry() {
  const PipelineConfig config;
  const DepthBins bins = config.depth_bins();
  synthetic::SequenceSpec spec;  // 30 frames, 320x240, 0.5 m travel
  const fs::path root = work_dir() / "sequence";
  write_sequence(root, synthetic::two_plane_sequence(spec, bins), config.dataset.depth_scale);
  const DatasetIndex dataset = load_dataset(root);
  const PipelineResult r = run_pipeline(dataset, config, build_bank(config));
  const double ate = r.ate.value_or(INFINITY);
  int fallbacks = 0;
  for (const auto& s : r.trials.front().stats) fallbacks += s.fallback;
  return {ate <= 0.05, fmt::format("{} frames, ATE {:.4f} m, depth delta1 {:.4f}, {} fallback frames",
                                   dataset.entries.size(), ate, r.depth.delta1, fallbacks)};
}

int shell(const std::string& cmd) {
  const int st = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Outcome ablation_harness() {
  const std::string cli = APERTURE_CLI;
  const fs::path dir = work_dir() / "ablation";
  const std::string ds = (dir / "ds").string();
  if (shell(cli + " synth --out " + ds + " --frames 10 --width 160 --height 120") != 0)
    return {false, "synth failed"};
  std::string detail;
  bool pass = true;
  for (const auto& [axis, values] : {std::pair<std::string, std::string>{"mask_size", "11,23,51"},
                                     std::pair<std::string, std::string>{"focus_distance", "0.5,0.85,2.5"}}) {
    const fs::path first = dir / (axis + "_1"), second = dir / (axis + "_2");
    const std::string args = " ablate " + ds + " --axis " + axis + " --values " + values + " --out ";
    const int rc1 = shell(cli + args + first.string());
    const int rc2 = shell(cli + " --manifest " + (first / "manifest.json").string() + args + second.string());
    int rows = 0, ok_rows = 0;
    if (fs::exists(first / "ablation.json")) {
      const auto j = nlohmann::json::parse(io::read_file(first / "ablation.json"));
      for (const auto& row : j.at("rows")) ++rows, ok_rows += row.at("ok").get<bool>();
    }
    bool identical = rc1 == 0 && rc2 == 0;
    for (const char* f : {"ablation.txt", "ablation.json"})
      identical = identical && io::sha256_file(first / f) == io::sha256_file(second / f);
    pass = pass && rc1 == 0 && rows == 3 && ok_rows == 3 && identical;
    detail += fmt::format("{}{}: {} rows ({} ok), rerun from manifest identical: {}", detail.empty() ? "" : "; ", axis,
                          rows, ok_rows, identical ? "yes" : "no");
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria{
      {1, "PSF validity", 60, psf_validity},
      {2, "single-layer reduction", 30, single_layer_reduction},
      {3, "occlusion oracle", 10, occlusion_oracle},
      {4, "depth round trip", 300, depth_round_trip},
      {5, "loss correctness", 10, loss_correctness},
      {6, "metric correctness", 10, metric_correctness},
      {7, "pose estimation", 30, pose_estimation},
      {8, "ATE oracle", 10, ate_oracle},
      {9, "end-to-end odometry", 600, end_to_end_odometry},
      {10, "ablation harness", 1800, ablation_harness},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && s <= c.limit_s;
    failed += !pass;
    std::printf("[%s] %2d %-24s %s (%.1f s, limit %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                s, c.limit_s);
    std::fflush(stdout);
  }
  fs::remove_all(work_dir());
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
