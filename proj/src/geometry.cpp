#include "aperture/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "aperture/error.hpp"

namespace aperture {
namespace {

Eigen::Vector3d centroid(std::span<const Eigen::Vector3d> pts) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

}  // namespace

bool is_degenerate(std::span<const Eigen::Vector3d> points, double rel_tol) {
  if (points.size() < 3) return true;
  const Eigen::Vector3d c = centroid(points);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) cov += (p - c) * (p - c).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov);
  const auto s = svd.singularValues();
  // Singular values of the scatter matrix are squared extents.
  return !(s(0) > 0.0) || s(1) <= rel_tol * rel_tol * s(0);
}

RigidTransform fit_rigid(std::span<const Eigen::Vector3d> src, std::span<const Eigen::Vector3d> dst,
                         bool with_scale) {
  if (src.size() != dst.size()) throw AlignmentError("point lists differ in length");
  if (src.size() < 3) throw AlignmentError("rigid alignment needs at least 3 pairs");
  if (is_degenerate(src) || is_degenerate(dst))
    throw AlignmentError("rigid alignment needs non-collinear points");
  const Eigen::Vector3d cs = centroid(src);
  const Eigen::Vector3d cd = centroid(dst);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    cov += (dst[i] - cd) * (src[i] - cs).transpose();
    var_src += (src[i] - cs).squaredNorm();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  RigidTransform t;
  t.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  if (with_scale) t.scale = (svd.singularValues().asDiagonal() * d).trace() / var_src;
  t.translation = cd - t.scale * (t.rotation * cs);
  return t;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

double rotation_angle(const Eigen::Matrix3d& r) {
  // atan2 form stays accurate near 0 and pi, unlike acos of the trace.
  const Eigen::Vector3d axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (r.trace() - 1.0));
}

}  // namespace aperture
