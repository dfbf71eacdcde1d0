#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "pgval/metrics.hpp"

using namespace pgval;

namespace {

Trajectory line(std::size_t n, double step) {
  Trajectory t;
  for (std::size_t k = 0; k < n; ++k) t.push_back({double(k), Pose3::translate(step * k, 0, 0)});
  return t;
}

}  // namespace

TEST(Report, RateIdentity) {
  const ErrorReport d = make_error_report("dvso", 5.0, 100, 0.00148, 0.043);
  EXPECT_NEAR(d.trans_per_second, 0.0074, 1e-12);
  EXPECT_NEAR(d.rot_deg_per_second, 0.215, 1e-12);
  const ErrorReport w = make_error_report("wheel", 50.0, 100, 0.00018, 0.002);
  EXPECT_NEAR(w.trans_per_second, 0.009, 1e-12);
  EXPECT_NEAR(w.rot_deg_per_second, 0.1, 1e-12);
}

TEST(Closure, Cases) {
  Trajectory loop = line(5, 1.0);
  loop.push_back({5.0, loop.front().pose});
  EXPECT_EQ(closure_error(loop, DofMode::full3d).planar, 0.0);
  EXPECT_NEAR(closure_error(line(101, 1.0), DofMode::planar).planar, 100.0, 1e-12);
  Trajectory up = line(2, 0.0);
  up.back().pose = Pose3::translate(3, 4, 2);
  EXPECT_NEAR(closure_error(up, DofMode::full3d).planar, 5.0, 1e-15);
  EXPECT_NEAR(closure_error(up, DofMode::full3d).vertical, 2.0, 1e-15);
  EXPECT_EQ(closure_error(up, DofMode::planar).vertical, 0.0);
  EXPECT_THROW(closure_error(Trajectory(1), DofMode::planar), DataError);
}

TEST(Closure, RawDvsoMatchesForwardIntegration) {
  ScenarioConfig cfg = fixtures::single_source(ScenarioConfig{}, "dvso");
  cfg.seed = 4;
  const Scenario sc = simulate_scenario(cfg);
  const auto& src = sc.sources[0];
  const Vec3 end = oracle::integrate_injected(src.ground_truth, src.corrupted.injected);
  const Vec3 start = src.corrupted.track.frames.front().pose.translation();
  EXPECT_NEAR(closure_error(src.corrupted.track.frames, DofMode::full3d).planar,
              (end - start).head<2>().norm(), 1e-9);
}

TEST(Ate, Cases) {
  const Trajectory gt = generate_ground_truth(TrajectoryProfile{}, 5.0);
  EXPECT_LT(ate_rmse(gt, gt), 1e-12);
  Trajectory moved = gt;
  const Pose3 x = Pose3::from_euler(0.7, 0.1, -0.3, Vec3(4, -2, 1));
  for (auto& s : moved) s.pose = x * s.pose;
  EXPECT_LT(ate_rmse(moved, gt), 1e-9);
  EXPECT_GT(ate_rmse(moved, gt, false), 1.0);
  Trajectory shifted = gt;
  for (auto& s : shifted) s.pose = Pose3::translate(0, 0.1, 0) * s.pose;
  EXPECT_NEAR(ate_rmse(shifted, gt, false), 0.1, 1e-12);
  shifted.pop_back();
  EXPECT_THROW(ate_rmse(shifted, gt), DataError);
  Trajectory late = gt;
  late[3].timestamp += 0.01;
  EXPECT_THROW(ate_rmse(late, gt), DataError);
}

TEST(Corrections, NoiselessAreZero) {
  const ScenarioConfig cfg = fixtures::noiseless_config();
  const Scenario sc = simulate_scenario(cfg);
  for (const auto& s : sc.sources) {
    const auto ev = evaluate(s.corrupted.track, sc.observations, cfg.landmarks, cfg.solver,
                             s.corrupted.track.mode);
    const ErrorReport& r = report_of(ev);
    EXPECT_LT(r.trans_per_frame, 1e-9) << s.name;
    EXPECT_LT(r.rot_deg_per_frame, 1e-9) << s.name;
    EXPECT_EQ(r.frames, s.corrupted.track.frames.size());
  }
}

TEST(Corrections, UnconstrainedIsFlaggedAndZero) {
  const Trajectory gt = generate_ground_truth(TrajectoryProfile{}, 5.0);
  const CorruptedTrack c = corrupt(gt, NoiseProfile::dvso(), 1, "dvso");
  const auto ev = evaluate_as<Pose3>(c.track, {}, LandmarkLayout{}, SolverSettings{});
  EXPECT_TRUE(ev.report.unconstrained);
  EXPECT_EQ(ev.report.trans_per_frame, 0.0);
  EXPECT_EQ(ev.report.rot_deg_per_frame, 0.0);
  EXPECT_NEAR(ev.report.closure_optimized, ev.report.closure_raw, 1e-12);
}

TEST(Corrections, TrackFormMatchesGraphForm) {
  ScenarioConfig cfg = fixtures::single_source(ScenarioConfig{}, "dvso");
  const Scenario sc = simulate_scenario(cfg);
  const OdometryTrack& raw = sc.sources[0].corrupted.track;
  const auto ev = evaluate_as<Pose3>(raw, observations_within(raw, sc.observations), cfg.landmarks,
                                     cfg.solver);
  const ErrorReport from_tracks = per_frame_corrections(raw, ev.optimized_track(), DofMode::full3d);
  EXPECT_NEAR(from_tracks.trans_per_frame, ev.report.trans_per_frame, 1e-9);
  EXPECT_NEAR(from_tracks.rot_deg_per_frame, ev.report.rot_deg_per_frame, 1e-9);
  EXPECT_NEAR(from_tracks.closure_optimized, ev.report.closure_optimized, 1e-12);
  EXPECT_EQ(from_tracks.frames, ev.report.frames);
}

TEST(Corrections, SplitMergeNeutrality) {
  ScenarioConfig cfg = fixtures::single_source(ScenarioConfig{}, "dvso");
  const Scenario sc = simulate_scenario(cfg);
  const OdometryTrack& raw = sc.sources[0].corrupted.track;
  std::vector<LandmarkObservation> weightless = observations_within(raw, sc.observations);
  for (auto& o : weightless) o.weights = {0.0, 0.0};

  const auto plain = evaluate_as<Pose3>(raw, {}, cfg.landmarks, cfg.solver);
  const auto split = evaluate_as<Pose3>(raw, weightless, cfg.landmarks, cfg.solver);
  EXPECT_GT(split.graph.nodes.size(), plain.graph.nodes.size());
  EXPECT_EQ(split.report.frames, plain.report.frames);
  EXPECT_NEAR(split.report.trans_per_frame, plain.report.trans_per_frame, 1e-9);
  EXPECT_NEAR(split.report.rot_deg_per_frame, plain.report.rot_deg_per_frame, 1e-9);
  EXPECT_NEAR(split.report.closure_optimized, plain.report.closure_optimized, 1e-9);
  // Corrections straight from the optimized states, bypassing the flag.
  const auto direct = per_frame_corrections(raw, split.optimized_track(), DofMode::full3d);
  EXPECT_LT(direct.trans_per_frame, 1e-9);
}

TEST(Corrections, SplittingNextToRealConstraintsIsNearNeutral) {
  // With live observations the split halves are not exactly additive on the
  // group, so the change is second order rather than zero.
  ScenarioConfig cfg = fixtures::single_source(ScenarioConfig{}, "dvso");
  cfg.solver.cost_threshold = 1e-15;
  const Scenario sc = simulate_scenario(cfg);
  const OdometryTrack& raw = sc.sources[0].corrupted.track;
  const auto obs = observations_within(raw, sc.observations);
  std::vector<LandmarkObservation> padded = obs;
  for (double t = 0.13; t < raw.frames.back().timestamp; t += 7.77)
    padded.push_back({0, t, Pose3::translate(1, 0, 0), {0.0, 0.0}});
  std::stable_sort(padded.begin(), padded.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });

  const auto plain = evaluate_as<Pose3>(raw, obs, cfg.landmarks, cfg.solver);
  const auto split = evaluate_as<Pose3>(raw, padded, cfg.landmarks, cfg.solver);
  EXPECT_GT(split.graph.nodes.size(), plain.graph.nodes.size() + 40);
  EXPECT_NEAR(split.report.trans_per_frame, plain.report.trans_per_frame,
              1e-3 * plain.report.trans_per_frame);
  EXPECT_NEAR(split.report.rot_deg_per_frame, plain.report.rot_deg_per_frame,
              1e-3 * plain.report.rot_deg_per_frame);
}

TEST(Corrections, PhaseBreakdown) {
  ScenarioConfig cfg = fixtures::single_source(ScenarioConfig{}, "dvso");
  const Scenario sc = simulate_scenario(cfg);
  const OdometryTrack& raw = sc.sources[0].corrupted.track;
  const auto ev = evaluate_as<Pose3>(raw, sc.observations, cfg.landmarks, cfg.solver);
  // 6 s of turning at 5 Hz.
  EXPECT_EQ(ev.report.turn.increments, 30u);
  EXPECT_EQ(ev.report.straight.increments + ev.report.turn.increments, raw.frames.size() - 1);
  const double n = static_cast<double>(raw.frames.size() - 1);
  EXPECT_NEAR(ev.report.trans_per_frame,
              (ev.report.straight.mean_trans * ev.report.straight.increments +
               ev.report.turn.mean_trans * ev.report.turn.increments) / n,
              1e-15);
}

TEST(Corrections, DenseLandmarksRecoverInjectedMagnitude) {
  // Constraints at every frame pin each increment, so the corrections equal
  // the injected errors.
  ScenarioConfig cfg = fixtures::single_source(ScenarioConfig{}, "dvso");
  cfg.detection.rate = 5.0;
  cfg.detection.max_range = 1000.0;
  cfg.detection.max_bearing_deg = 180.0;
  cfg.detection.trans_sigma = 1e-5;
  cfg.detection.rot_sigma_deg = 1e-4;
  for (std::uint64_t seed : {1u, 2u}) {
    cfg.seed = seed;
    const Scenario sc = simulate_scenario(cfg);
    const auto& s = sc.sources[0];
    const auto ev = evaluate_as<Pose3>(s.corrupted.track, sc.observations, cfg.landmarks,
                                       cfg.solver);
    EXPECT_NEAR(ev.report.trans_per_frame, 0.00148, 0.05 * 0.00148);
    EXPECT_NEAR(ev.report.rot_deg_per_frame, 0.043, 0.05 * 0.043);
  }
}
