#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "aperture/optics.hpp"
#include "aperture/render.hpp"
#include "aperture/vo.hpp"

namespace aperture::testing {

struct DefaultOptics {
  CameraConfig camera;
  PhaseMask mask = make_zernike_mask(default_mask_coefficients(), 23);
  DepthBins bins = make_depth_bins(27, 0.5, 6.0);
  PsfBank bank = build_psf_bank(mask, make_circular_aperture(mask, camera), camera, bins.centers);
};

// Built once per test binary.
inline const DefaultOptics& default_optics() {
  static const DefaultOptics optics;
  return optics;
}

inline ImageD uniform_noise(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ImageD img(w, h);
  for (double& v : img.pixels()) v = u(rng);
  return img;
}

inline ColorImage uniform_color(int w, int h, std::uint64_t seed) {
  ColorImage c;
  for (int k = 0; k < 3; ++k) c.channels[static_cast<std::size_t>(k)] = uniform_noise(w, h, seed + k);
  return c;
}

// Textbook convolution with clamped reads, one output pixel at a time.
inline double convolve_at(const ImageD& img, const ImageD& k, int x, int y) {
  const int rx = k.width() / 2, ry = k.height() / 2;
  double s = 0.0;
  for (int j = 0; j < k.height(); ++j)
    for (int i = 0; i < k.width(); ++i) s += k(i, j) * img.clamped(x + rx - i, y + ry - j);
  return s;
}

inline ImageD convolve_reference(const ImageD& img, const ImageD& k) {
  ImageD out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out(x, y) = convolve_at(img, k, x, y);
  return out;
}

// Independent scalar evaluation of the far-to-near compositing recurrence.
inline ColorImage composite_reference(const SceneFrame& f, const DepthBins& bins, const PsfBank& bank) {
  const int w = f.rgb.width(), h = f.rgb.height();
  const int nb = static_cast<int>(bins.centers.size());
  std::vector<int> layer(static_cast<std::size_t>(w * h));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double d = f.depth(x, y);
      int best = nb - 1;
      if (std::isfinite(d) && d > 0.0) {
        double bd = INFINITY;
        for (int b = 0; b < nb; ++b) {
          const double e = std::abs(1.0 / bins.centers[b] - 1.0 / d);
          if (e < bd) bd = e, best = b;
        }
      }
      layer[static_cast<std::size_t>(y * w + x)] = best;
    }
  ColorImage out(w, h);
  for (int c = 0; c < 3; ++c) {
    for (int b = nb - 1; b >= 0; --b) {
      ImageD mask(w, h), masked(w, h);
      bool any = false;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          if (layer[static_cast<std::size_t>(y * w + x)] == b) {
            mask(x, y) = 1.0;
            masked(x, y) = f.rgb[c](x, y);
            any = true;
          }
      if (!any) continue;
      const ImageD& k = bank.kernel(static_cast<std::size_t>(b), c);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double cov = convolve_at(mask, k, x, y);
          if (!(cov > 1e-3)) continue;
          const double rad = convolve_at(masked, k, x, y);
          const double a = std::min(1.0, std::max(0.0, cov));
          out[c](x, y) = rad / std::max(cov, 1e-6) * a + out[c](x, y) * (1.0 - a);
        }
    }
  }
  return out;
}


// Horn's closed form: the optimal rotation is the top eigenvector of a 4x4
// symmetric matrix built from the cross-covariance.
inline double horn_rmse(const std::vector<Eigen::Vector3d>& est, const std::vector<Eigen::Vector3d>& gt) {
  const auto n = static_cast<double>(est.size());
  Eigen::Vector3d ce = Eigen::Vector3d::Zero(), cg = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) ce += est[i], cg += gt[i];
  ce /= n;
  cg /= n;
  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) s += (est[i] - ce) * (gt[i] - cg).transpose();
  Eigen::Matrix4d nm;
  nm << s(0, 0) + s(1, 1) + s(2, 2), s(1, 2) - s(2, 1), s(2, 0) - s(0, 2), s(0, 1) - s(1, 0),
      s(1, 2) - s(2, 1), s(0, 0) - s(1, 1) - s(2, 2), s(0, 1) + s(1, 0), s(2, 0) + s(0, 2),
      s(2, 0) - s(0, 2), s(0, 1) + s(1, 0), -s(0, 0) + s(1, 1) - s(2, 2), s(1, 2) + s(2, 1),
      s(0, 1) - s(1, 0), s(2, 0) + s(0, 2), s(1, 2) + s(2, 1), -s(0, 0) - s(1, 1) + s(2, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(nm);
  const Eigen::Vector4d v = es.eigenvectors().col(3);
  const Eigen::Matrix3d r = Eigen::Quaterniond(v(0), v(1), v(2), v(3)).toRotationMatrix();
  double se = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) se += (r * (est[i] - ce) + cg - gt[i]).squaredNorm();
  return std::sqrt(se / n);
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, max_angle);
  const Eigen::Vector3d axis = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
  return Eigen::AngleAxisd(u(rng), axis).toRotationMatrix();
}

// Points in front of a camera and their images under a random small motion;
// the first outlier_fraction of the pairs are displaced off the motion.
struct PointPairs {
  std::vector<Eigen::Vector3d> prev, curr;
  Pose truth;
};

inline PointPairs random_point_pairs(std::uint64_t seed, int n, double outlier_fraction) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> xy(-1.0, 1.0), z(0.5, 3.0), t(-0.2, 0.2);
  PointPairs s;
  s.truth.rotation = random_rotation(rng, 0.3);
  s.truth.translation = {t(rng), t(rng), t(rng)};
  const int outliers = static_cast<int>(std::round(outlier_fraction * n));
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d p(xy(rng), xy(rng), z(rng));
    s.prev.push_back(p);
    Eigen::Vector3d q = s.truth.apply(p);
    if (i < outliers) q += Eigen::Vector3d(xy(rng), xy(rng), xy(rng)) * 0.5 + Eigen::Vector3d(0.3, 0, 0);
    s.curr.push_back(q);
  }
  return s;
}

}  // namespace aperture::testing
