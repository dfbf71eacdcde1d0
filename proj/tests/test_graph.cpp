#include <random>
#include <set>

#include <gtest/gtest.h>

#include "pgval/graph.hpp"
#include "pgval/pipeline.hpp"

using namespace pgval;

namespace {

OdometryTrack chain(std::size_t n, double step) {
  OdometryTrack t;
  t.source = "test";
  t.rate = 5.0;
  t.weights = {1.0, 1.0};
  for (std::size_t k = 0; k < n; ++k)
    t.frames.push_back({k / 5.0, Pose3::translate(step * k, 0, 0)});
  return t;
}

}  // namespace

TEST(BuildGraph, NoObservationsIsUnconstrained) {
  const AlignedSequence a = align(chain(6, 1.0), {});
  const auto g = build_graph<Pose3>(a, LandmarkLayout{});
  EXPECT_TRUE(g.unconstrained);
  EXPECT_EQ(g.edge_count(), g.nodes.size() - 1);
}

TEST(BuildGraph, LandmarkInitializationIdentity) {
  LandmarkLayout layout;
  const Pose3 z = Pose3::from_euler(0.3, 0.1, -0.2, Vec3(2.0, 1.2, 0.1));
  const AlignedSequence a = align(chain(3, 1.0), {{0, 0.2, z, {1.0, 1.0}}});
  const auto g = build_graph<Pose3>(a, layout);
  EXPECT_EQ(g.odometry.size(), 2u);
  EXPECT_EQ(g.observations.size(), 1u);
  const auto s = g.initial_state();
  const Pose3 predicted = g.pole_world_pose(s, 0);
  const Pose3 observed = g.nodes[1].pose * z;
  EXPECT_LT((predicted.translation() - observed.translation()).norm(), 1e-12);
  EXPECT_LT(rotation_angle_deg(relative(predicted, observed)), 1e-9);
  EXPECT_LT(residual(g, s, g.observations[0]).vector.norm(), 1e-12);
}

TEST(BuildGraph, CountsMatchAlignedSequence) {
  ScenarioConfig cfg;
  cfg.sources = {{"dvso", NoiseProfile::dvso()}};
  const Scenario sc = simulate_scenario(cfg);
  const OdometryTrack& track = sc.sources[0].corrupted.track;
  const auto obs = observations_within(track, sc.observations);

  // Independent count: frames plus distinct observation times off the frame grid.
  std::set<long long> off_grid;
  for (const auto& o : obs) {
    const double f = o.timestamp * track.rate;
    if (std::abs(f - std::round(f)) > 1e-9) off_grid.insert(std::llround(o.timestamp * 1e6));
  }
  const std::size_t nodes = track.frames.size() + off_grid.size();

  const auto g = build_graph<Pose3>(align(track, obs), cfg.landmarks);
  EXPECT_EQ(g.nodes.size(), nodes);
  EXPECT_EQ(g.odometry.size(), nodes - 1);
  EXPECT_EQ(g.observations.size(), obs.size());
  EXPECT_EQ(g.edge_count(), nodes - 1 + obs.size());
  EXPECT_FALSE(g.unconstrained);
}

TEST(BuildGraph, PlanarModeProjects) {
  LandmarkLayout layout;
  const Pose3 z = Pose3::from_euler(0.3, 0.1, 0.0, Vec3(2.0, 1.2, 0.4));
  const auto g = build_graph<Pose2>(align(chain(3, 1.0), {{1, 0.2, z, {1.0, 1.0}}}), layout);
  EXPECT_NEAR(g.observations[0].measured.yaw(), project_planar(z).yaw(), 1e-15);
  EXPECT_EQ(g.template_poses[1].x(), layout.spacing);
}

TEST(BuildGraph, RejectsBadInput) {
  LandmarkLayout layout;
  EXPECT_THROW(build_graph<Pose3>(align(chain(3, 1.0), {{7, 0.2, Pose3(), {1, 1}}}), layout),
               DataError);
  AlignedSequence disconnected = align(chain(4, 1.0), {});
  disconnected.measurements.erase(disconnected.measurements.begin() + 1);
  EXPECT_THROW(build_graph<Pose3>(disconnected, layout), DataError);
}

TEST(Connectivity, Predicate) {
  auto g = build_graph<Pose3>(align(chain(5, 1.0), {{0, 0.2, Pose3(), {1, 1}}}), LandmarkLayout{});
  EXPECT_TRUE(g.is_connected());
  // Cutting the chain isolates nodes 3-4 until one of them sees a pole.
  g.odometry.erase(g.odometry.begin() + 2);
  EXPECT_FALSE(g.is_connected());
  g.observations.push_back({4, 1, Pose3(), {1, 1}});
  EXPECT_TRUE(g.is_connected());
}

TEST(Residual, ZeroWhenSatisfied) {
  const auto g = build_graph<Pose3>(align(chain(4, 1.0), {}), LandmarkLayout{});
  const auto s = g.initial_state();
  for (const auto& e : g.odometry) {
    const auto r = residual(g, s, e);
    EXPECT_LT(r.vector.norm(), 1e-15);
    EXPECT_EQ(r.weighted_sq_norm, 0.0);
  }
  EXPECT_LT(total_cost(g, s), 1e-30);
}

TEST(Residual, TranslationOvershoot) {
  auto g = build_graph<Pose3>(align(chain(2, 1.0), {}), LandmarkLayout{});
  auto s = g.initial_state();
  s.poses[1] = Pose3::translate(1.1, 0, 0);
  const auto r = residual(g, s, g.odometry[0]);
  EXPECT_NEAR(r.vector.head<3>().norm(), 0.1, 1e-12);
  EXPECT_NEAR(r.weighted_sq_norm, 0.01, 1e-12);

  auto g2 = build_graph<Pose2>(align(chain(2, 1.0), {}), LandmarkLayout{});
  auto s2 = g2.initial_state();
  s2.poses[1] = Pose2(1.1, 0, 0);
  EXPECT_NEAR(residual(g2, s2, g2.odometry[0]).vector.head<2>().norm(), 0.1, 1e-12);
}

TEST(Residual, PerturbationIsFirstOrder) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  OdometryTrack t = chain(2, 1.0);
  t.frames[1].pose = Pose3::from_euler(0.4, -0.2, 0.1, Vec3(1.0, 0.3, -0.2));
  const auto g = build_graph<Pose3>(align(t, {}), LandmarkLayout{});
  for (int k = 0; k < 50; ++k) {
    Vec6 d;
    for (int i = 0; i < 6; ++i) d(i) = u(rng);
    d *= 1e-4 / d.norm() * std::abs(u(rng));
    auto s = g.initial_state();
    s.poses[1] = s.poses[1].retract(d);
    const Vec6 r = residual(g, s, g.odometry[0]).vector;
    EXPECT_LT((r - d).norm(), 1e-8);
  }
}

TEST(Template, RigidUnderLandmarkMotion) {
  auto g = build_graph<Pose3>(align(chain(3, 1.0), {{0, 0.2, Pose3::translate(1, 1, 0), {1, 1}}}),
                              LandmarkLayout{});
  auto s = g.initial_state();
  s.landmark_frame = Pose3::from_euler(0.7, 0.2, -0.4, Vec3(5, -3, 2));
  for (int k = 1; k < 4; ++k) {
    const double d = (g.pole_world_pose(s, k).translation() -
                      g.pole_world_pose(s, k - 1).translation()).norm();
    EXPECT_NEAR(d, 18.0, 1e-12);
  }
}

TEST(Residual, PositionOnlyIgnoresRotation) {
  GraphOptions opt;
  opt.position_only = true;
  const Pose3 z = Pose3::translate(2, 1, 0);
  auto g = build_graph<Pose3>(align(chain(3, 1.0), {{0, 0.2, z, {1, 1}}}), LandmarkLayout{}, opt);
  auto s = g.initial_state();
  s.landmark_frame = s.landmark_frame * Pose3::from_yaw(0.3);
  EXPECT_LT(residual(g, s, g.observations[0]).vector.norm(), 1e-12);
}

TEST(Huber, KernelShape) {
  EXPECT_EQ(robust_cost(4.0, 0.0), 4.0);
  EXPECT_EQ(robust_cost(0.25, 1.0), 0.25);
  EXPECT_NEAR(robust_cost(9.0, 1.0), 5.0, 1e-12);
  EXPECT_NEAR(robust_weight(9.0, 1.0), 1.0 / 3.0, 1e-15);
}
