#pragma once

// End-to-end runs over a dataset: all-in-focus frames + ground-truth depth ->
// coded frames -> estimated depth -> odometry -> ATE. The staged helpers back
// the individual CLI subcommands and write the same folder layout the loader
// reads, so stages can be chained on disk.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "aperture/config.hpp"
#include "aperture/dataset.hpp"
#include "aperture/depth.hpp"
#include "aperture/optics.hpp"
#include "aperture/render.hpp"
#include "aperture/synthetic.hpp"
#include "aperture/vo.hpp"

namespace aperture {

/// Mask from mask.file, else from mask.zernike (built-in coefficients when
/// empty) on a mask.grid x mask.grid lattice of mask.pitch cells.
PhaseMask build_mask(const PipelineConfig& config);
PsfBank build_bank(const PipelineConfig& config, Exec exec = Exec::parallel);

/// Seed of trial `trial`; every random draw in that trial descends from it.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

/// Layered blur of one all-in-focus frame, then Gaussian sensor noise when
/// noise_sigma > 0.
CodedFrame code_frame(const SceneFrame& frame, const DepthBins& bins, const PsfBank& bank,
                      double noise_sigma, std::uint64_t noise_seed);

/// Metrics over all frames pooled pixel-wise (frames must share a width).
DepthMetrics pooled_depth_metrics(const std::vector<ImageD>& pred, const std::vector<ImageD>& gt,
                                  double max_depth);
/// Field-wise median.
DepthMetrics median_depth_metrics(const std::vector<DepthMetrics>& metrics);

struct TrialResult {
  std::uint64_t seed = 0;
  DepthMetrics depth;
  Trajectory trajectory;
  std::vector<FrameStats> stats;
  std::optional<double> ate;  // set when the dataset has ground truth
};

struct PipelineResult {
  std::vector<TrialResult> trials;
  DepthMetrics depth;         // median over trials
  std::optional<double> ate;  // median over trials
  std::uint64_t bank_fingerprint = 0;
};

/// Optional artifact folders for the first trial: coded frames (16-bit PNG,
/// plus PFM when float_maps) and estimated depth (16-bit PNG and PFM), each
/// with a listing of the PNGs.
struct PipelineSinks {
  std::optional<fs::path> coded_dir;
  std::optional<fs::path> depth_dir;
  bool float_maps = false;
};

PipelineResult run_pipeline(const DatasetIndex& dataset, const PipelineConfig& config,
                            const PsfBank& bank, const PipelineSinks& sinks = {});

/// Writes a copy of the dataset whose rgb frames are coded (rgb/*.png, 16-bit,
/// and rgb/*.pfm linear float maps when requested) and whose depth, intrinsics
/// and ground truth are the inputs'. rgb.txt lists the float maps when they
/// are written, the PNGs otherwise. Returns the files written. Noise seeds
/// match trial 0 of run_pipeline.
std::vector<fs::path> render_dataset(const DatasetIndex& dataset, const PipelineConfig& config,
                                     const PsfBank& bank, const fs::path& out, bool float_maps = false);

struct DepthStageResult {
  DepthMetrics metrics;  // estimated vs the dataset's depth frames
  std::vector<fs::path> written;
};

/// Estimates depth for every coded frame; writes out/depth/*.png (listed in
/// depth.txt) and out/depth/*.pfm.
DepthStageResult estimate_dataset(const DatasetIndex& coded, const PipelineConfig& config,
                                  const PsfBank& bank, const fs::path& out);

/// Odometry over coded frames, with depth from `depth_dir` (a folder written
/// by estimate_dataset) or from the dataset itself.
Trajectory odometry_on_dataset(const DatasetIndex& coded, const std::optional<fs::path>& depth_dir,
                               const PipelineConfig& config, std::vector<FrameStats>* stats = nullptr);

/// TUM-layout folder: rgb/*.png (16-bit), depth/*.png, listings, intrinsics.txt,
/// groundtruth.txt. Returns the files written.
std::vector<fs::path> write_sequence(const fs::path& root, const synthetic::Sequence& sequence,
                                     double depth_scale);

}  // namespace aperture
