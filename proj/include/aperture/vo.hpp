#pragma once

// Frame-to-frame metric visual odometry on coded RGB frames with depth maps:
// unsharp mask, pyramid corners with oriented binary descriptors, mutual
// Hamming matching, back-projection through the depth map, and RANSAC over
// closed-form 3-point rigid fits.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "aperture/image.hpp"
#include "aperture/kernels.hpp"
#include "aperture/render.hpp"

namespace aperture {

struct VoConfig {
  int pyramid_levels = 4;
  double scale_factor = 1.2;
  int max_features = 1000;
  double depth_gate = 3.0;        // m; points farther than this are dropped
  int ransac_iterations = 500;
  double inlier_threshold = 0.05; // m
  double unsharp_amount = 1.0;
  double unsharp_radius = 2.0;    // px, Gaussian sigma
  int min_inliers = 12;
  std::uint64_t seed = 0;
  void validate() const;
  bool operator==(const VoConfig&) const = default;
};

/// Rigid pose with a timestamp. As an absolute pose it maps camera to world
/// coordinates; as a relative pose it maps previous-camera to current-camera.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double timestamp = 0.0;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  Pose inverse() const;
  /// this * other (apply other first); keeps this->timestamp.
  Pose compose(const Pose& other) const;
  Eigen::Quaterniond quaternion() const;
  static Pose from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& t, double stamp);
};

struct Trajectory {
  std::vector<Pose> poses;
  /// Nonempty, strictly increasing timestamps, orthonormal rotations.
  void validate() const;
  std::size_t size() const noexcept { return poses.size(); }
};

using Descriptor = std::array<std::uint64_t, 4>;  // 256 bits

struct Keypoint {
  double x = 0.0;       // level-0 pixel coordinates
  double y = 0.0;
  int level = 0;
  double score = 0.0;   // corner response at its level
  double angle = 0.0;   // intensity-centroid orientation, radians
  Descriptor descriptor{};
};

int hamming(const Descriptor& a, const Descriptor& b) noexcept;

/// clamp(in + amount (in - gaussian_blur(in, radius)), 0, 1)
ImageD unsharp_mask(const ImageD& image, double amount, double radius, Exec exec = Exec::parallel);
ColorImage unsharp_mask(const ColorImage& image, double amount, double radius,
                        Exec exec = Exec::parallel);

/// Level 0 is the input; level k is resampled by 1 / scale^k.
std::vector<ImageD> build_pyramid(const ImageD& image, int levels, double scale);

/// Shi-Tomasi corners with non-maximum suppression and sub-pixel refinement,
/// distributed over pyramid levels by area, each with a 256-bit descriptor
/// steered by its orientation. Deterministic for a given input and seed.
std::vector<Keypoint> detect_features(const ImageD& gray, const VoConfig& config);
std::vector<Keypoint> detect_features(const ColorImage& rgb, const VoConfig& config);

struct MatchOptions {
  double ratio = 0.8;     // best / second-best distance must be below this
  int max_distance = 64;  // bits
};

/// Mutual nearest neighbours under Hamming distance that pass the ratio test
/// and the distance cap. Pairs are (index in a, index in b), ascending in a.
std::vector<std::pair<int, int>> match_features(std::span<const Keypoint> a,
                                                std::span<const Keypoint> b,
                                                const MatchOptions& options = {});

/// depth * ((x - cx) / fx, (y - cy) / fy, 1) using the depth at the nearest
/// pixel, if 0 < depth <= depth_gate.
std::optional<Eigen::Vector3d> backproject(const Keypoint& keypoint, const ImageD& depth,
                                           const Intrinsics& intrinsics, double depth_gate);
std::optional<Eigen::Vector3d> backproject(double x, double y, const ImageD& depth,
                                           const Intrinsics& intrinsics, double depth_gate);

struct RelativePose {
  Pose pose;                 // maps points_prev onto points_curr
  int inliers = 0;
  std::vector<bool> inlier_mask;
};

/// RANSAC over 3-point samples, hypotheses from the closed-form rigid fit,
/// inliers by residual < inlier_threshold, refit on all inliers. Throws
/// TooFewCorrespondences when fewer than 3 pairs are given or fewer than
/// min_inliers survive; AlignmentError when every sample is degenerate.
RelativePose estimate_relative_pose(std::span<const Eigen::Vector3d> points_prev,
                                    std::span<const Eigen::Vector3d> points_curr,
                                    const VoConfig& config, std::uint64_t seed);
RelativePose estimate_relative_pose(std::span<const Eigen::Vector3d> points_prev,
                                    std::span<const Eigen::Vector3d> points_curr,
                                    const VoConfig& config);

struct OdometryFrame {
  ColorImage rgb;
  ImageD depth;  // m, aligned with rgb
  double timestamp = 0.0;
};

struct FrameStats {
  int keypoints = 0;
  int matches = 0;
  int correspondences = 0;  // matches with valid depth on both sides
  int inliers = 0;
  bool fallback = false;    // constant-velocity pose used
};

/// First pose is identity at the first timestamp; each later pose is the
/// previous one composed with the inverse of the estimated relative motion.
/// When a frame cannot be tracked the last relative motion is repeated and a
/// warning is logged.
Trajectory run_odometry(std::span<const OdometryFrame> frames, const Intrinsics& intrinsics,
                        const VoConfig& config, std::vector<FrameStats>* stats = nullptr);

}  // namespace aperture
