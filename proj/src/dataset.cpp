#include "aperture/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <spdlog/spdlog.h>

#include "aperture/error.hpp"
#include "aperture/io.hpp"

namespace aperture {
namespace {

struct Listed {
  double timestamp;
  fs::path path;
};

std::vector<Listed> read_listing(const fs::path& root, const std::string& name) {
  const fs::path file = root / name;
  if (!fs::exists(file)) throw LoadError("missing file: " + file.string());
  std::istringstream in(io::read_file(file));
  std::vector<Listed> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string ts, rel;
    if (!(fields >> ts)) continue;
    if (!(fields >> rel))
      throw SyntaxError(file.string() + ":" + std::to_string(n) + ": expected 'timestamp path'", n);
    double t = 0.0;
    try {
      t = io::parse_double(ts);
    } catch (const SyntaxError&) {
      throw SyntaxError(file.string() + ":" + std::to_string(n) + ": bad timestamp '" + ts + "'", n);
    }
    out.push_back({t, root / rel});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Listed& a, const Listed& b) { return a.timestamp < b.timestamp; });
  return out;
}

// Greedy on |dt| with index tie-breaks; each depth frame used once.
std::vector<DatasetEntry> associate_listings(const std::vector<Listed>& rgb,
                                             const std::vector<Listed>& depth, double max_dt) {
  struct Candidate {
    double dt;
    std::size_t i, j;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    const auto lo = std::lower_bound(depth.begin(), depth.end(), rgb[i].timestamp - max_dt,
                                     [](const Listed& d, double t) { return d.timestamp < t; });
    for (auto it = lo; it != depth.end() && it->timestamp <= rgb[i].timestamp + max_dt; ++it)
      candidates.push_back({std::abs(it->timestamp - rgb[i].timestamp), i,
                            static_cast<std::size_t>(it - depth.begin())});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dt, a.i, a.j) < std::tie(b.dt, b.i, b.j);
  });
  std::vector<int> match(rgb.size(), -1);
  std::vector<bool> used(depth.size(), false);
  for (const auto& c : candidates) {
    if (match[c.i] >= 0 || used[c.j]) continue;
    match[c.i] = static_cast<int>(c.j);
    used[c.j] = true;
  }
  std::vector<DatasetEntry> out;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    if (match[i] < 0) {
      ++skipped;
      spdlog::warn("no depth frame within {} s of rgb frame at t={} ({})", max_dt,
                   rgb[i].timestamp, rgb[i].path.string());
      continue;
    }
    out.push_back({rgb[i].timestamp, rgb[i].path, depth[static_cast<std::size_t>(match[i])].path});
  }
  if (skipped > 0) spdlog::warn("{} of {} rgb frames left unpaired", skipped, rgb.size());
  return out;
}

std::optional<long long> numeric_stem(const fs::path& p) {
  const std::string stem = p.stem().string();
  if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return std::nullopt;
  return std::stoll(stem);
}

std::vector<DatasetEntry> icl_entries(const fs::path& root) {
  const fs::path rgb_dir = root / "rgb";
  const fs::path depth_dir = root / "depth";
  if (!fs::is_directory(rgb_dir)) throw LoadError("missing directory: " + rgb_dir.string());
  if (!fs::is_directory(depth_dir)) throw LoadError("missing directory: " + depth_dir.string());
  std::map<long long, fs::path> frames;
  for (const auto& e : fs::directory_iterator(rgb_dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext != ".png" && ext != ".pfm") continue;
    if (auto n = numeric_stem(e.path())) frames.emplace(*n, e.path());
  }
  std::vector<DatasetEntry> out;
  for (const auto& [n, rgb] : frames) {
    fs::path depth = depth_dir / (rgb.stem().string() + ".png");
    if (!fs::exists(depth)) depth.replace_extension(".pfm");
    if (!fs::exists(depth))
      throw LoadError("missing file: " + (depth_dir / (rgb.stem().string() + ".png")).string());
    out.push_back({static_cast<double>(n), rgb, depth});
  }
  return out;
}

}  // namespace

DatasetLayout parse_layout(const std::string& name) {
  if (name == "auto") return DatasetLayout::automatic;
  if (name == "tum") return DatasetLayout::tum;
  if (name == "icl") return DatasetLayout::icl;
  throw InvalidArgument("unknown dataset layout '" + name + "' (auto, tum, icl)");
}

std::vector<fs::path> DatasetIndex::files() const {
  std::vector<fs::path> out;
  out.push_back(root / "intrinsics.txt");
  if (layout == DatasetLayout::tum) {
    out.push_back(root / "rgb.txt");
    out.push_back(root / "depth.txt");
  }
  if (ground_truth) out.push_back(*ground_truth);
  for (const auto& e : entries) {
    out.push_back(e.rgb);
    out.push_back(e.depth);
  }
  return out;
}

DatasetIndex load_dataset(const fs::path& root, const DatasetOptions& options) {
  if (!fs::is_directory(root)) throw LoadError("missing directory: " + root.string());
  DatasetIndex index;
  index.root = root;
  index.layout = options.layout;
  if (index.layout == DatasetLayout::automatic)
    index.layout = fs::exists(root / "rgb.txt") ? DatasetLayout::tum : DatasetLayout::icl;

  const fs::path intr = root / "intrinsics.txt";
  if (!fs::exists(intr)) throw LoadError("missing file: " + intr.string());
  const auto k = io::read_intrinsics(intr);
  index.intrinsics = k.intrinsics;
  index.depth_scale = k.depth_scale.value_or(options.depth_scale);

  if (index.layout == DatasetLayout::tum) {
    const auto rgb = read_listing(root, "rgb.txt");
    const auto depth = read_listing(root, "depth.txt");
    for (const auto& l : rgb)
      if (!fs::exists(l.path)) throw LoadError("missing file: " + l.path.string());
    for (const auto& l : depth)
      if (!fs::exists(l.path)) throw LoadError("missing file: " + l.path.string());
    index.entries = associate_listings(rgb, depth, options.max_dt);
  } else {
    index.entries = icl_entries(root);
  }
  if (index.entries.empty()) throw EmptyInput(root.string() + ": no rgb-depth pairs");
  if (fs::exists(root / "groundtruth.txt")) index.ground_truth = root / "groundtruth.txt";
  return index;
}

ColorImage load_rgb(const fs::path& path) {
  if (path.extension() == ".pfm") return io::read_pfm_rgb(path);
  return io::read_png_rgb(path);
}

ImageD load_depth(const fs::path& path, double depth_scale) {
  if (path.extension() == ".pfm") return io::read_pfm(path);
  return io::read_depth_png(path, depth_scale);
}

Trajectory flip_y_axis(const Trajectory& trajectory) {
  const Eigen::Matrix3d s = Eigen::Vector3d(1.0, -1.0, 1.0).asDiagonal();
  Trajectory out = trajectory;
  for (auto& p : out.poses) {
    p.rotation = s * p.rotation * s;
    p.translation = s * p.translation;
  }
  return out;
}

Trajectory load_ground_truth(const DatasetIndex& index, bool flip_y) {
  if (!index.ground_truth) throw LoadError("missing file: " + (index.root / "groundtruth.txt").string());
  Trajectory t = io::read_trajectory(*index.ground_truth);
  return flip_y ? flip_y_axis(t) : t;
}

void write_listing(const fs::path& path, const std::vector<std::pair<double, std::string>>& rows) {
  std::string out = "# timestamp filename\n";
  for (const auto& [t, rel] : rows) out += io::format_double(t) + " " + rel + "\n";
  io::write_file_atomic(path, out);
}

}  // namespace aperture
