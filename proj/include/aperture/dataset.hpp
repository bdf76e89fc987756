#pragma once

// RGB-D sequence folders in two layouts:
//   tum  rgb.txt / depth.txt listings ("timestamp relative/path"), pairs
//        associated by nearest timestamp
//   icl  rgb/<n>.png and depth/<n>.png paired by number; timestamp = n
// Both need intrinsics.txt (fx, fy, cx, cy, optional depth_scale) at the
// root; groundtruth.txt in TUM trajectory format is optional.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aperture/image.hpp"
#include "aperture/render.hpp"
#include "aperture/vo.hpp"

namespace aperture {

namespace fs = std::filesystem;

enum class DatasetLayout { automatic, tum, icl };

DatasetLayout parse_layout(const std::string& name);

struct DatasetEntry {
  double timestamp = 0.0;
  fs::path rgb;
  fs::path depth;
};

struct DatasetIndex {
  fs::path root;
  DatasetLayout layout = DatasetLayout::tum;
  std::vector<DatasetEntry> entries;  // nonempty, time-sorted
  Intrinsics intrinsics;
  double depth_scale = 5000.0;
  std::optional<fs::path> ground_truth;

  /// Every file the index refers to, in a stable order.
  std::vector<fs::path> files() const;
};

struct DatasetOptions {
  DatasetLayout layout = DatasetLayout::automatic;
  double max_dt = 0.02;          // s, tum association tolerance
  double depth_scale = 5000.0;   // used when intrinsics.txt has none
};

/// Throws LoadError naming the first missing path, EmptyInput when nothing
/// pairs up. Unpaired rgb frames are skipped with a warning.
DatasetIndex load_dataset(const fs::path& root, const DatasetOptions& options = {});

/// Linear RGB from .png (sRGB) or .pfm (linear).
ColorImage load_rgb(const fs::path& path);
/// Meters from .png (divided by depth_scale) or .pfm (meters).
ImageD load_depth(const fs::path& path, double depth_scale);

/// Ground truth with an optional y-axis flip (p -> S p, R -> S R S, S = diag(1,-1,1)).
Trajectory load_ground_truth(const DatasetIndex& index, bool flip_y = false);
Trajectory flip_y_axis(const Trajectory& trajectory);

/// Writes "timestamp path" listing lines (paths relative to the listing).
void write_listing(const fs::path& path, const std::vector<std::pair<double, std::string>>& rows);

}  // namespace aperture
