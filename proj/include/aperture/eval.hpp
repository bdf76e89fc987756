#pragma once

// Trajectory association and Absolute Trajectory Error after rigid alignment.

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "aperture/vo.hpp"

namespace aperture {

/// Greedy nearest-timestamp pairing: candidate pairs with |dt| <= max_dt are
/// taken in order of increasing |dt| (ties by index), each pose used once.
/// Returned pairs (est index, gt index) are sorted by time. Throws
/// AssociationFailure when nothing pairs up.
std::vector<std::pair<std::size_t, std::size_t>> associate(const Trajectory& est,
                                                           const Trajectory& gt,
                                                           double max_dt = 0.02);

struct AlignmentResult {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;
  double rmse = 0.0;
  int pairs_used = 0;
};

/// Transform taking est onto gt (SE(3), scale 1) and the RMS residual norm.
/// Throws AlignmentError for fewer than 3 pairs or collinear positions.
AlignmentResult rigid_align_no_scale(const std::vector<Eigen::Vector3d>& est,
                                     const std::vector<Eigen::Vector3d>& gt);

/// Similarity alignment (scale estimated); for comparison only.
AlignmentResult similarity_align(const std::vector<Eigen::Vector3d>& est,
                                 const std::vector<Eigen::Vector3d>& gt);

struct AteReport {
  AlignmentResult alignment;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<Eigen::Vector3d> aligned;   // est positions after alignment
  std::vector<Eigen::Vector3d> reference; // paired gt positions
  std::vector<double> timestamps;         // est timestamps of the pairs
  double ate() const noexcept { return alignment.rmse; }
};

AteReport evaluate_ate(const Trajectory& est, const Trajectory& gt, double max_dt = 0.02,
                       bool with_scale = false);

/// associate -> rigid_align_no_scale on positions -> RMSE, meters.
double compute_ate(const Trajectory& est, const Trajectory& gt, double max_dt = 0.02);

}  // namespace aperture
