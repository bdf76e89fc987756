#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aperture/error.hpp"
#include "aperture/eval.hpp"
#include "common.hpp"

using namespace aperture;

namespace {

using Points = std::vector<Eigen::Vector3d>;

Trajectory make_traj(const std::vector<double>& stamps, const Points& pos) {
  Trajectory t;
  for (std::size_t i = 0; i < stamps.size(); ++i) {
    Pose p;
    p.timestamp = stamps[i];
    p.translation = pos.empty() ? Eigen::Vector3d::Zero() : pos[i];
    t.poses.push_back(p);
  }
  return t;
}

Points random_cloud(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Points p;
  for (int i = 0; i < n; ++i) p.emplace_back(g(rng), 0.5 * g(rng), 0.2 * g(rng));
  return p;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

double rmse_with(const Points& est, const Points& gt, const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  double se = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) se += (r * est[i] + t - gt[i]).squaredNorm();
  return std::sqrt(se / static_cast<double>(est.size()));
}

}  // namespace

TEST(Associate, HandExamples) {
  const Trajectory est = make_traj({0.0, 0.1, 0.2, 0.3}, {});
  const Trajectory gt = make_traj({0.005, 0.095, 0.25, 0.31, 0.4}, {});
  const auto pairs = associate(est, gt, 0.02);
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(pairs[0], (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(pairs[1], (std::pair<std::size_t, std::size_t>{1, 1}));
  EXPECT_EQ(pairs[2], (std::pair<std::size_t, std::size_t>{3, 3}));
}

TEST(Associate, EachPoseUsedOnceClosestFirst) {
  const Trajectory est = make_traj({1.0, 1.01}, {});
  const Trajectory gt = make_traj({1.009}, {});
  const auto pairs = associate(est, gt, 0.02);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].first, 1u);
  EXPECT_THROW(associate(est, make_traj({5.0}, {}), 0.02), AssociationFailure);
}

TEST(Align, RecoversKnownTransform) {
  std::mt19937_64 rng(1);
  const Points est = random_cloud(rng, 20);
  const Eigen::Matrix3d r = random_rotation(rng);
  const Eigen::Vector3d t(0.3, -1.0, 2.0);
  Points gt;
  for (const auto& p : est) gt.push_back(r * p + t);
  const AlignmentResult a = rigid_align_no_scale(est, gt);
  EXPECT_LE((a.rotation - r).norm(), 1e-9);
  EXPECT_LE((a.translation - t).norm(), 1e-9);
  EXPECT_LE(a.rmse, 1e-9);
  EXPECT_EQ(a.scale, 1.0);
  EXPECT_EQ(a.pairs_used, 20);
}

TEST(Align, DegenerateInputsThrow) {
  const Points two{{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(rigid_align_no_scale(two, two), AlignmentError);
  const Points line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  EXPECT_THROW(rigid_align_no_scale(line, line), AlignmentError);
}

TEST(Align, SimilarityRecoversScale) {
  std::mt19937_64 rng(2);
  const Points est = random_cloud(rng, 15);
  Points gt;
  for (const auto& p : est) gt.push_back(2.5 * p + Eigen::Vector3d(1, 2, 3));
  const AlignmentResult a = similarity_align(est, gt);
  EXPECT_NEAR(a.scale, 2.5, 1e-9);
  EXPECT_LE(a.rmse, 1e-9);
}

TEST(Ate, MatchesHornOracleOnNoisyClouds) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int trial = 0; trial < 25; ++trial) {
    const Points gt = random_cloud(rng, 30);
    const Eigen::Matrix3d r = random_rotation(rng);
    Points est;
    for (const auto& p : gt) est.push_back(r * p + Eigen::Vector3d(noise(rng), noise(rng), noise(rng)) + Eigen::Vector3d(4, 0, 1));
    EXPECT_NEAR(rigid_align_no_scale(est, gt).rmse, aperture::testing::horn_rmse(est, gt), 1e-10);
  }
}

TEST(Ate, InvariantUnderRigidMotionOfEstimate) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.03);
  Points gt = random_cloud(rng, 25), est;
  std::vector<double> stamps;
  for (int i = 0; i < 25; ++i) {
    stamps.push_back(0.1 * i);
    est.push_back(gt[static_cast<std::size_t>(i)] + Eigen::Vector3d(noise(rng), noise(rng), noise(rng)));
  }
  const double base = compute_ate(make_traj(stamps, est), make_traj(stamps, gt));
  for (int k = 0; k < 5; ++k) {
    const Eigen::Matrix3d r = random_rotation(rng);
    Points moved;
    for (const auto& p : est) moved.push_back(r * p + Eigen::Vector3d(k, -k, 0.5));
    EXPECT_NEAR(compute_ate(make_traj(stamps, moved), make_traj(stamps, gt)), base, 1e-10);
  }
}

TEST(Ate, IdenticalIsZeroAndScalingHurts) {
  std::mt19937_64 rng(5);
  const Points gt = random_cloud(rng, 20);
  std::vector<double> stamps;
  Points doubled;
  for (int i = 0; i < 20; ++i) {
    stamps.push_back(i);
    doubled.push_back(2.0 * gt[static_cast<std::size_t>(i)]);
  }
  EXPECT_LE(compute_ate(make_traj(stamps, gt), make_traj(stamps, gt)), 1e-12);
  EXPECT_GT(compute_ate(make_traj(stamps, doubled), make_traj(stamps, gt)), 0.1);
  const AteReport sim = evaluate_ate(make_traj(stamps, doubled), make_traj(stamps, gt), 0.02, true);
  EXPECT_LE(sim.ate(), 1e-9);
}

TEST(Ate, AlignmentIsALocalOptimum) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 0.05);
  const Points gt = random_cloud(rng, 30);
  Points est;
  for (const auto& p : gt) est.push_back(p + Eigen::Vector3d(noise(rng), noise(rng), noise(rng)));
  const AlignmentResult a = rigid_align_no_scale(est, gt);
  const double best = rmse_with(est, gt, a.rotation, a.translation);
  EXPECT_NEAR(best, a.rmse, 1e-12);
  for (int axis = 0; axis < 3; ++axis)
    for (double eps : {-1e-3, 1e-3}) {
      Eigen::Vector3d dt = Eigen::Vector3d::Zero();
      dt(axis) = eps;
      EXPECT_GT(rmse_with(est, gt, a.rotation, a.translation + dt), best);
      const Eigen::Matrix3d dr = Eigen::AngleAxisd(eps, Eigen::Vector3d::Unit(axis)).toRotationMatrix();
      EXPECT_GT(rmse_with(est, gt, dr * a.rotation, a.translation), best);
    }
}

TEST(Ate, SingleDisplacedPoseMatchesRecomputation) {
  std::mt19937_64 rng(7);
  const Points gt = random_cloud(rng, 12);
  std::vector<double> stamps;
  for (int i = 0; i < 12; ++i) stamps.push_back(0.05 * i);
  for (std::size_t k = 0; k < gt.size(); ++k) {
    Points est = gt;
    est[k] += Eigen::Vector3d(0.1, -0.2, 0.05);
    EXPECT_NEAR(compute_ate(make_traj(stamps, est), make_traj(stamps, gt)), aperture::testing::horn_rmse(est, gt), 1e-10);
  }
}

TEST(Ate, ReportCarriesPairsAndAlignedPositions) {
  std::mt19937_64 rng(8);
  const Points gt = random_cloud(rng, 10);
  std::vector<double> es, gs;
  for (int i = 0; i < 10; ++i) es.push_back(i), gs.push_back(i + 0.01);
  const AteReport r = evaluate_ate(make_traj(es, gt), make_traj(gs, gt), 0.02);
  EXPECT_EQ(r.pairs.size(), 10u);
  EXPECT_EQ(r.aligned.size(), 10u);
  EXPECT_EQ(r.timestamps.front(), 0.0);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_LE((r.aligned[i] - r.reference[i]).norm(), 1e-9);
}
