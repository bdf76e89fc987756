#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "aperture/geometry.hpp"
#include "aperture/seed.hpp"
#include "aperture/vo.hpp"

namespace aperture {
namespace {

constexpr double kOrthoTol = 1e-9;
// Draw budget when samples keep coming out collinear.
constexpr int kDegenerateRetries = 20;

Pose to_pose(const RigidTransform& t) {
  Pose p;
  p.rotation = t.rotation;
  p.translation = t.translation;
  return p;
}

int count_inliers(std::span<const Eigen::Vector3d> prev, std::span<const Eigen::Vector3d> curr,
                  const RigidTransform& t, double threshold, std::vector<bool>* mask,
                  double* residual_sum) {
  int n = 0;
  double sum = 0.0;
  if (mask) mask->assign(prev.size(), false);
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const double r = (t.apply(prev[i]) - curr[i]).norm();
    if (r < threshold) {
      ++n;
      sum += r;
      if (mask) (*mask)[i] = true;
    }
  }
  if (residual_sum) *residual_sum = sum;
  return n;
}

RigidTransform fit_subset(std::span<const Eigen::Vector3d> prev, std::span<const Eigen::Vector3d> curr,
                          const std::vector<bool>& mask) {
  std::vector<Eigen::Vector3d> a;
  std::vector<Eigen::Vector3d> b;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    a.push_back(prev[i]);
    b.push_back(curr[i]);
  }
  return fit_rigid(a, b);
}

}  // namespace

void VoConfig::validate() const {
  if (pyramid_levels < 1) throw InvalidArgument("vo.pyramid_levels must be >= 1");
  if (!(scale_factor > 1.0)) throw InvalidArgument("vo.scale_factor must be > 1");
  if (max_features < 1) throw InvalidArgument("vo.max_features must be >= 1");
  if (!(depth_gate > 0.0)) throw InvalidArgument("vo.depth_gate must be > 0");
  if (ransac_iterations < 1) throw InvalidArgument("vo.ransac_iterations must be >= 1");
  if (!(inlier_threshold > 0.0)) throw InvalidArgument("vo.inlier_threshold must be > 0");
  if (!(unsharp_amount >= 0.0) || !std::isfinite(unsharp_amount))
    throw InvalidArgument("vo.unsharp_amount must be >= 0");
  if (!(unsharp_radius > 0.0) || !std::isfinite(unsharp_radius))
    throw InvalidArgument("vo.unsharp_radius must be > 0");
  if (min_inliers < 3) throw InvalidArgument("vo.min_inliers must be >= 3");
}

Pose Pose::inverse() const {
  Pose p;
  p.rotation = rotation.transpose();
  p.translation = -(p.rotation * translation);
  p.timestamp = timestamp;
  return p;
}

Pose Pose::compose(const Pose& other) const {
  Pose p;
  p.rotation = orthonormalize(rotation * other.rotation);
  p.translation = rotation * other.translation + translation;
  p.timestamp = timestamp;
  return p;
}

Eigen::Quaterniond Pose::quaternion() const {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  // One canonical sign so text output is stable.
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

Pose Pose::from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& t, double stamp) {
  if (!(q.norm() > 0.0)) throw InvalidArgument("quaternion has zero norm");
  Pose p;
  p.rotation = orthonormalize(q.normalized().toRotationMatrix());
  p.translation = t;
  p.timestamp = stamp;
  return p;
}

void Trajectory::validate() const {
  if (poses.empty()) throw InvalidArgument("trajectory is empty");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Pose& p = poses[i];
    if (!std::isfinite(p.timestamp)) throw InvalidArgument("trajectory timestamp is not finite");
    if (i > 0 && !(p.timestamp > poses[i - 1].timestamp))
      throw InvalidArgument("trajectory timestamps must be strictly increasing");
    const double ortho = (p.rotation.transpose() * p.rotation - Eigen::Matrix3d::Identity()).norm();
    if (!(ortho <= kOrthoTol) || std::abs(p.rotation.determinant() - 1.0) > kOrthoTol)
      throw InvalidArgument("trajectory rotation is not a proper rotation");
    if (!p.translation.allFinite()) throw InvalidArgument("trajectory translation is not finite");
  }
}

std::optional<Eigen::Vector3d> backproject(double x, double y, const ImageD& depth,
                                           const Intrinsics& k, double depth_gate) {
  if (!(k.fx > 0.0) || !(k.fy > 0.0)) throw InvalidArgument("intrinsics need fx, fy > 0");
  const auto px = static_cast<long>(std::lround(x));
  const auto py = static_cast<long>(std::lround(y));
  if (px < 0 || py < 0 || px >= depth.width() || py >= depth.height()) return std::nullopt;
  const double z = depth(static_cast<int>(px), static_cast<int>(py));
  if (!(z > 0.0) || !(z <= depth_gate)) return std::nullopt;
  return Eigen::Vector3d(z * (x - k.cx) / k.fx, z * (y - k.cy) / k.fy, z);
}

std::optional<Eigen::Vector3d> backproject(const Keypoint& kp, const ImageD& depth,
                                           const Intrinsics& intrinsics, double depth_gate) {
  return backproject(kp.x, kp.y, depth, intrinsics, depth_gate);
}

RelativePose estimate_relative_pose(std::span<const Eigen::Vector3d> prev,
                                    std::span<const Eigen::Vector3d> curr, const VoConfig& config,
                                    std::uint64_t seed) {
  config.validate();
  if (prev.size() != curr.size()) throw InvalidArgument("point lists differ in length");
  const std::size_t n = prev.size();
  if (n < 3) throw TooFewCorrespondences("pose estimation needs at least 3 correspondences");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  RigidTransform best;
  int best_count = -1;
  double best_sum = 0.0;
  int attempts_left = config.ransac_iterations * kDegenerateRetries;
  for (int it = 0; it < config.ransac_iterations && attempts_left > 0; --attempts_left) {
    std::size_t idx[3];
    idx[0] = pick(rng);
    do idx[1] = pick(rng); while (idx[1] == idx[0]);
    do idx[2] = pick(rng); while (idx[2] == idx[0] || idx[2] == idx[1]);
    const std::array<Eigen::Vector3d, 3> a{prev[idx[0]], prev[idx[1]], prev[idx[2]]};
    const std::array<Eigen::Vector3d, 3> b{curr[idx[0]], curr[idx[1]], curr[idx[2]]};
    if (is_degenerate(a, 1e-6) || is_degenerate(b, 1e-6)) continue;
    ++it;
    const RigidTransform t = fit_rigid(a, b);
    double sum = 0.0;
    const int count = count_inliers(prev, curr, t, config.inlier_threshold, nullptr, &sum);
    if (count > best_count || (count == best_count && sum < best_sum)) {
      best = t;
      best_count = count;
      best_sum = sum;
      if (count == static_cast<int>(n)) break;
    }
  }
  if (best_count < 0) throw AlignmentError("every sampled correspondence triple was degenerate");

  RelativePose out;
  out.inliers = count_inliers(prev, curr, best, config.inlier_threshold, &out.inlier_mask, nullptr);
  // Refit on the consensus set until it stops changing.
  for (int round = 0; round < 5 && out.inliers >= 3; ++round) {
    std::vector<bool> mask;
    RigidTransform refit;
    try {
      refit = fit_subset(prev, curr, out.inlier_mask);
    } catch (const AlignmentError&) {
      break;
    }
    const int count = count_inliers(prev, curr, refit, config.inlier_threshold, &mask, nullptr);
    if (count < out.inliers) break;
    best = refit;
    const bool same = mask == out.inlier_mask;
    out.inliers = count;
    out.inlier_mask = std::move(mask);
    if (same) break;
  }
  if (out.inliers < config.min_inliers)
    throw TooFewCorrespondences("pose estimation found " + std::to_string(out.inliers) +
                                " inliers, fewer than min_inliers = " +
                                std::to_string(config.min_inliers));
  out.pose = to_pose(best);
  return out;
}

RelativePose estimate_relative_pose(std::span<const Eigen::Vector3d> prev,
                                    std::span<const Eigen::Vector3d> curr, const VoConfig& config) {
  return estimate_relative_pose(prev, curr, config, config.seed);
}

Trajectory run_odometry(std::span<const OdometryFrame> frames, const Intrinsics& intrinsics,
                        const VoConfig& config, std::vector<FrameStats>* stats) {
  config.validate();
  if (frames.size() < 2) throw InvalidArgument("odometry needs at least 2 frames");
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0))
    throw InvalidArgument("intrinsics need fx, fy > 0");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (!f.rgb[0].same_shape(f.depth))
      throw InvalidArgument("frame " + std::to_string(i) + ": depth map is not aligned with rgb");
    if (i > 0 && !(f.timestamp > frames[i - 1].timestamp))
      throw InvalidArgument("frame timestamps must be strictly increasing");
  }

  // Detection is independent per frame; pose chaining below is sequential.
  std::vector<std::vector<Keypoint>> keypoints(frames.size());
  const auto count = static_cast<long>(frames.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    const ImageD gray = luma(frames[static_cast<std::size_t>(i)].rgb);
    keypoints[static_cast<std::size_t>(i)] = detect_features(
        unsharp_mask(gray, config.unsharp_amount, config.unsharp_radius, Exec::serial), config);
  }

  Trajectory traj;
  Pose current;
  current.timestamp = frames[0].timestamp;
  traj.poses.push_back(current);
  Pose velocity;  // last relative motion, previous camera -> current camera
  if (stats) {
    stats->assign(frames.size(), FrameStats{});
    (*stats)[0].keypoints = static_cast<int>(keypoints[0].size());
  }
  for (std::size_t i = 1; i < frames.size(); ++i) {
    FrameStats fs;
    fs.keypoints = static_cast<int>(keypoints[i].size());
    const auto matches = match_features(keypoints[i - 1], keypoints[i]);
    fs.matches = static_cast<int>(matches.size());
    std::vector<Eigen::Vector3d> prev_pts;
    std::vector<Eigen::Vector3d> curr_pts;
    for (const auto& [a, b] : matches) {
      const auto p = backproject(keypoints[i - 1][static_cast<std::size_t>(a)], frames[i - 1].depth,
                                 intrinsics, config.depth_gate);
      const auto q = backproject(keypoints[i][static_cast<std::size_t>(b)], frames[i].depth,
                                 intrinsics, config.depth_gate);
      if (!p || !q) continue;
      prev_pts.push_back(*p);
      curr_pts.push_back(*q);
    }
    fs.correspondences = static_cast<int>(prev_pts.size());
    try {
      const RelativePose rel =
          estimate_relative_pose(prev_pts, curr_pts, config, derive_seed(config.seed, i));
      velocity = rel.pose;
      fs.inliers = rel.inliers;
    } catch (const Error& e) {
      fs.fallback = true;
      spdlog::warn("frame {} (t={}): tracking failed ({}); repeating last motion", i,
                   frames[i].timestamp, e.what());
    }
    current = current.compose(velocity.inverse());
    current.timestamp = frames[i].timestamp;
    traj.poses.push_back(current);
    if (stats) (*stats)[i] = fs;
  }
  return traj;
}

}  // namespace aperture
