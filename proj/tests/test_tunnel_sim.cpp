#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pgval/tunnel_sim.hpp"

using namespace pgval;

TEST(GroundTruth, StraightLegKinematics) {
  TrajectoryProfile p;
  p.return_leg = false;
  p.turn_angle_deg = 0.0;
  const Trajectory gt = generate_ground_truth(p, 50.0);
  EXPECT_EQ(gt.size(), 10001u);
  EXPECT_EQ(gt.front().timestamp, 0.0);
  EXPECT_NEAR(gt.back().timestamp, 200.0, 1e-12);
  EXPECT_LT((gt.back().pose.translation() - Vec3(100, 0, 0)).norm(), 0.5 / 50.0 + 1e-12);
  for (std::size_t k = 1; k < gt.size(); ++k)
    EXPECT_NEAR(gt[k].timestamp - gt[k - 1].timestamp, 0.02, 1e-9);
}

TEST(GroundTruth, TurnSweepsMonotonically) {
  TrajectoryProfile p;
  p.straight_length = 1.0;
  p.return_leg = false;
  const Trajectory gt = generate_ground_truth(p, 50.0);
  double prev = -1.0;
  for (const auto& s : gt) {
    if (s.timestamp <= p.straight_duration()) continue;
    const double yaw = rotation_angle_deg(s.pose);
    EXPECT_GE(yaw, prev - 1e-9);
    prev = yaw;
  }
  EXPECT_NEAR(prev, 180.0, 1e-9);
}

TEST(GroundTruth, DefaultProfileDurationAndClosure) {
  TrajectoryProfile p;
  const Trajectory gt = generate_ground_truth(p, 5.0);
  const double expected = p.duration() * 5.0;
  EXPECT_NEAR(static_cast<double>(gt.size()), expected, 1.0 + 1e-9);
  EXPECT_LT(gt.back().pose.translation().norm(), 0.2);
  EXPECT_NEAR(p.duration(), 406.0, 1e-9);
}

TEST(GroundTruth, MatchesKinematicOracle) {
  TrajectoryProfile p;
  for (double t : {0.0, 13.3, 200.0, 201.7, 206.0, 300.25, 406.0}) {
    const Pose3 x = ground_truth_pose(p, t);
    const Eigen::Isometry3d ref = oracle::profile_pose(p, t);
    EXPECT_LT((x.translation() - ref.translation()).norm(), 1e-9) << t;
    EXPECT_LT((x.rotation_matrix() - ref.linear()).norm(), 1e-9) << t;
  }
}

TEST(Corrupt, ZeroNoiseIsIdentity) {
  const Trajectory gt = generate_ground_truth(TrajectoryProfile{}, 5.0);
  NoiseProfile n = NoiseProfile::dvso();
  n.trans_error = 0.0;
  n.rot_error_deg = 0.0;
  const CorruptedTrack c = corrupt(gt, n, 42);
  ASSERT_EQ(c.track.frames.size(), gt.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    EXPECT_EQ(c.track.frames[k].timestamp, gt[k].timestamp);
    worst = std::max(worst, (c.track.frames[k].pose.translation() - gt[k].pose.translation()).norm());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Corrupt, InjectedMeansAreExact) {
  const Trajectory gt5 = generate_ground_truth(TrajectoryProfile{}, 5.0);
  const CorruptedTrack d = corrupt(gt5, NoiseProfile::dvso(), 1);
  EXPECT_NEAR(d.injected.mean_trans(), 0.00148, 1e-12);
  EXPECT_NEAR(d.injected.mean_rot_deg(), 0.043, 1e-12);
  for (std::size_t k = 0; k < d.injected.error_transforms.size(); ++k) {
    const Pose3& e = d.injected.error_transforms[k];
    EXPECT_NEAR(e.translation().norm(), 0.00148, 1e-15);
    EXPECT_NEAR(rotation_angle_deg(e), 0.043, 1e-9);
  }
  const Trajectory gt50 = generate_ground_truth(TrajectoryProfile{}, 50.0);
  const CorruptedTrack w = corrupt(gt50, NoiseProfile::wheel(), 1);
  EXPECT_NEAR(w.injected.mean_trans(), 0.00018, 1e-12);
  EXPECT_NEAR(w.injected.mean_rot_deg(), 0.002, 1e-12);
}

TEST(Corrupt, IncrementsCarryTheRecordedError) {
  const Trajectory gt = generate_ground_truth(TrajectoryProfile{}, 5.0);
  const CorruptedTrack c = corrupt(gt, NoiseProfile::dvso(), 3);
  for (std::size_t k = 0; k + 1 < gt.size(); k += 97) {
    const Pose3 measured = relative(c.track.frames[k].pose, c.track.frames[k + 1].pose);
    const Pose3 expected = relative(gt[k].pose, gt[k + 1].pose) * c.injected.error_transforms[k];
    EXPECT_LT((measured.translation() - expected.translation()).norm(), 1e-9);
  }
}

TEST(Corrupt, Deterministic) {
  const Trajectory gt = generate_ground_truth(TrajectoryProfile{}, 5.0);
  const CorruptedTrack a = corrupt(gt, NoiseProfile::dvso(), 7);
  const CorruptedTrack b = corrupt(gt, NoiseProfile::dvso(), 7);
  const CorruptedTrack c = corrupt(gt, NoiseProfile::dvso(), 8);
  bool differs = false;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    EXPECT_EQ(a.track.frames[k].pose.translation(), b.track.frames[k].pose.translation());
    EXPECT_EQ(a.track.frames[k].pose.rotation().coeffs(), b.track.frames[k].pose.rotation().coeffs());
    differs |= a.track.frames[k].pose.translation() != c.track.frames[k].pose.translation();
  }
  EXPECT_TRUE(differs);
}

TEST(Corrupt, PlanarModeStaysInPlane) {
  const Trajectory gt = generate_ground_truth(TrajectoryProfile{}, 50.0);
  const CorruptedTrack c = corrupt(gt, NoiseProfile::wheel(), 2);
  for (const auto& f : c.track.frames) {
    EXPECT_EQ(f.pose.translation().z(), 0.0);
    EXPECT_EQ(f.pose.rotation().x(), 0.0);
    EXPECT_EQ(f.pose.rotation().y(), 0.0);
  }
}

TEST(Corrupt, AxisScaleInflatesAlongTrackComponent) {
  const Trajectory gt = generate_ground_truth(TrajectoryProfile{}, 10.0);
  const NoiseProfile lidar = NoiseProfile::degenerate_lidar();
  const CorruptedTrack c = corrupt(gt, lidar, 5);
  double sum_x = 0.0, sum_y = 0.0;
  for (const Pose3& e : c.injected.error_transforms) {
    sum_x += std::abs(e.translation().x());
    sum_y += std::abs(e.translation().y());
    EXPECT_LE(std::abs(e.translation().y()), lidar.trans_error + 1e-15);
  }
  EXPECT_GT(sum_x / sum_y, 30.0);
}

TEST(Corrupt, RejectsRateMismatch) {
  const Trajectory gt = generate_ground_truth(TrajectoryProfile{}, 5.0);
  EXPECT_THROW(corrupt(gt, NoiseProfile::wheel(), 1), DataError);
  NoiseProfile n = NoiseProfile::dvso();
  n.frame_rate = 5.04;  // within 1%
  EXPECT_NO_THROW(corrupt(gt, n, 1));
  n.frame_rate = 5.1;
  EXPECT_THROW(corrupt(gt, n, 1), DataError);
}

TEST(Observations, RobotAtPoleGivesIdentity) {
  LandmarkLayout layout;
  DetectionModel model;
  model.trans_sigma = 0.0;
  model.rot_sigma_deg = 0.0;
  const Pose3 placement = layout.default_world_placement();
  const Trajectory gt = {{0.0, placement * layout.template_pose(2)},
                         {1.0, placement * layout.template_pose(2)}};
  const auto obs = simulate_landmark_observations(gt, layout, placement, model, 1);
  bool found = false;
  for (const auto& o : obs) {
    if (o.pole_id != 2) continue;
    found = true;
    EXPECT_LT(o.relative_pose.translation().norm(), 1e-15);
    EXPECT_LT(rotation_angle_deg(o.relative_pose), 1e-12);
  }
  EXPECT_TRUE(found);
}

TEST(Observations, RangeGate) {
  LandmarkLayout layout;
  const Pose3 beyond = Pose3::translate((layout.count - 1) * layout.spacing + 10.0, 0, 0);
  const Trajectory gt = {{0.0, beyond}, {2.0, beyond}};
  EXPECT_TRUE(simulate_landmark_observations(gt, layout, layout.default_world_placement(),
                                             DetectionModel{}, 1)
                  .empty());
}

TEST(Observations, CountMatchesGeometricSweep) {
  TrajectoryProfile p;
  LandmarkLayout layout;
  DetectionModel model;
  const auto obs = simulate_landmark_observations(generate_ground_truth(p, 50.0), layout,
                                                  layout.default_world_placement(), model, 1);
  EXPECT_EQ(obs.size(), oracle::sweep_observation_count(p, layout, model));
  EXPECT_GT(obs.size(), 50u);
}

TEST(Observations, DeterministicPerSeed) {
  const Trajectory gt = generate_ground_truth(TrajectoryProfile{}, 5.0);
  LandmarkLayout layout;
  const auto a = simulate_landmark_observations(gt, layout, layout.default_world_placement(), {}, 4);
  const auto b = simulate_landmark_observations(gt, layout, layout.default_world_placement(), {}, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].timestamp, b[k].timestamp);
    EXPECT_EQ(a[k].relative_pose.translation(), b[k].relative_pose.translation());
  }
}

TEST(Layout, TemplateIsCollinearAndEvenlySpaced) {
  LandmarkLayout layout;
  const auto poles = layout.template_poses();
  ASSERT_EQ(poles.size(), 4u);
  for (std::size_t k = 1; k < poles.size(); ++k) {
    const Vec3 d = poles[k].translation() - poles[k - 1].translation();
    EXPECT_EQ(d, Vec3(18.0, 0.0, 0.0));
  }
}

TEST(Seeds, StreamsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}
