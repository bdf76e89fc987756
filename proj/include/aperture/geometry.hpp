#pragma once

// Closed-form rigid (optionally similarity) alignment of paired 3-D points and
// the small amount of SE(3) algebra the odometry and evaluation code share.

#include <span>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace aperture {

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return scale * (rotation * p) + translation; }
};

/// Least-squares transform minimizing sum |s R src_i + t - dst_i|^2 via the SVD
/// of the cross-covariance, with the reflection case corrected. Scale stays 1
/// unless `with_scale`. Throws AlignmentError for fewer than 3 pairs or when
/// the source points are (numerically) collinear.
RigidTransform fit_rigid(std::span<const Eigen::Vector3d> src, std::span<const Eigen::Vector3d> dst,
                         bool with_scale = false);

/// True when the points span less than a line: the second singular value of
/// the centered cloud is below `rel_tol` times the first.
bool is_degenerate(std::span<const Eigen::Vector3d> points, double rel_tol = 1e-9);

/// Nearest rotation matrix (Frobenius) to m, det +1.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m);

/// Angle of a rotation matrix, radians in [0, pi].
double rotation_angle(const Eigen::Matrix3d& r);

}  // namespace aperture
