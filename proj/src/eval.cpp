#include "aperture/eval.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "aperture/geometry.hpp"

namespace aperture {
namespace {

AlignmentResult align(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& gt,
                      bool with_scale) {
  const RigidTransform t = fit_rigid(est, gt, with_scale);
  AlignmentResult r;
  r.rotation = t.rotation;
  r.translation = t.translation;
  r.scale = t.scale;
  double sum = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) sum += (t.apply(est[i]) - gt[i]).squaredNorm();
  r.rmse = std::sqrt(sum / static_cast<double>(est.size()));
  r.pairs_used = static_cast<int>(est.size());
  return r;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> associate(const Trajectory& est,
                                                           const Trajectory& gt, double max_dt) {
  if (est.poses.empty() || gt.poses.empty()) throw InvalidArgument("association needs nonempty trajectories");
  if (!(max_dt >= 0.0)) throw InvalidArgument("max_dt must be >= 0");
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < est.poses.size(); ++i) {
    for (std::size_t j = 0; j < gt.poses.size(); ++j) {
      const double dt = std::abs(est.poses[i].timestamp - gt.poses[j].timestamp);
      if (dt <= max_dt) candidates.emplace_back(dt, i, j);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<bool> used_est(est.poses.size(), false);
  std::vector<bool> used_gt(gt.poses.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& [dt, i, j] : candidates) {
    if (used_est[i] || used_gt[j]) continue;
    used_est[i] = used_gt[j] = true;
    pairs.emplace_back(i, j);
  }
  if (pairs.empty()) throw AssociationFailure("no trajectory poses within max_dt of each other");
  std::sort(pairs.begin(), pairs.end(), [&](const auto& a, const auto& b) {
    return std::make_pair(est.poses[a.first].timestamp, a.first) <
           std::make_pair(est.poses[b.first].timestamp, b.first);
  });
  return pairs;
}

AlignmentResult rigid_align_no_scale(const std::vector<Eigen::Vector3d>& est,
                                     const std::vector<Eigen::Vector3d>& gt) {
  return align(est, gt, false);
}

AlignmentResult similarity_align(const std::vector<Eigen::Vector3d>& est,
                                 const std::vector<Eigen::Vector3d>& gt) {
  return align(est, gt, true);
}

AteReport evaluate_ate(const Trajectory& est, const Trajectory& gt, double max_dt, bool with_scale) {
  AteReport r;
  r.pairs = associate(est, gt, max_dt);
  std::vector<Eigen::Vector3d> e;
  for (const auto& [i, j] : r.pairs) {
    e.push_back(est.poses[i].translation);
    r.reference.push_back(gt.poses[j].translation);
    r.timestamps.push_back(est.poses[i].timestamp);
  }
  r.alignment = align(e, r.reference, with_scale);
  for (const auto& p : e)
    r.aligned.push_back(r.alignment.scale * (r.alignment.rotation * p) + r.alignment.translation);
  return r;
}

double compute_ate(const Trajectory& est, const Trajectory& gt, double max_dt) {
  return evaluate_ate(est, gt, max_dt, false).ate();
}

}  // namespace aperture
