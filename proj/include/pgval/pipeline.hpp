#pragma once

// Scenario simulation and the align -> build -> optimize -> measure chain.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pgval/graph.hpp"
#include "pgval/metrics.hpp"
#include "pgval/optimizer.hpp"
#include "pgval/sync.hpp"
#include "pgval/tunnel_sim.hpp"

namespace pgval {

struct SourceConfig {
  std::string name;
  NoiseProfile noise;

  bool operator==(const SourceConfig&) const = default;
};

/// Built-in profile for a source name; unknown names get a noiseless 10 Hz
/// full-3D profile.
inline NoiseProfile preset_for(const std::string& name) {
  if (name == "dvso") return NoiseProfile::dvso();
  if (name == "wheel") return NoiseProfile::wheel();
  if (name == "lidar") return NoiseProfile::degenerate_lidar();
  return NoiseProfile{0.0, 0.0, 10.0, DofMode::full3d, Vec3::Ones()};
}

struct ScenarioConfig {
  std::uint64_t seed = 1;
  TrajectoryProfile trajectory;
  LandmarkLayout landmarks;
  DetectionModel detection;
  std::vector<SourceConfig> sources = {{"dvso", NoiseProfile::dvso()},
                                       {"wheel", NoiseProfile::wheel()},
                                       {"lidar", NoiseProfile::degenerate_lidar()}};
  SolverSettings solver;
  GraphOptions graph;

  void validate() const {
    trajectory.validate();
    landmarks.validate();
    detection.validate();
    solver.validate();
    if (sources.empty()) throw ConfigError("sources must name at least one source");
    for (const auto& s : sources) s.noise.validate(s.name);
  }

  const SourceConfig* find_source(const std::string& name) const {
    for (const auto& s : sources)
      if (s.name == name) return &s;
    return nullptr;
  }

  bool operator==(const ScenarioConfig& o) const {
    return seed == o.seed && trajectory == o.trajectory && landmarks == o.landmarks &&
           detection == o.detection && sources == o.sources && solver == o.solver &&
           graph.position_only == o.graph.position_only;
  }
};

struct SimulatedSource {
  std::string name;
  Trajectory ground_truth;  // at the source rate
  CorruptedTrack corrupted;
};

struct Scenario {
  Trajectory reference;  // ground truth at the highest source rate
  std::vector<LandmarkObservation> observations;
  std::vector<SimulatedSource> sources;
};

/// Observations are drawn once from the highest-rate ground truth and shared
/// by all sources. Stream 0 seeds the detections, stream k+1 source k.
inline Scenario simulate_scenario(const ScenarioConfig& config) {
  config.validate();
  Scenario out;
  double max_rate = 0.0;
  for (const auto& s : config.sources) max_rate = std::max(max_rate, s.noise.frame_rate);
  out.reference = generate_ground_truth(config.trajectory, max_rate);
  out.observations = simulate_landmark_observations(
      out.reference, config.landmarks, config.landmarks.default_world_placement(),
      config.detection, derive_seed(config.seed, 0));
  for (std::size_t k = 0; k < config.sources.size(); ++k) {
    const SourceConfig& src = config.sources[k];
    SimulatedSource sim;
    sim.name = src.name;
    sim.ground_truth = generate_ground_truth(config.trajectory, src.noise.frame_rate);
    sim.corrupted = corrupt(sim.ground_truth, src.noise, derive_seed(config.seed, k + 1), src.name);
    out.sources.push_back(std::move(sim));
  }
  return out;
}

/// Observations that fall inside the track's time span.
inline std::vector<LandmarkObservation> observations_within(
    const OdometryTrack& track, const std::vector<LandmarkObservation>& obs) {
  std::vector<LandmarkObservation> out;
  if (track.frames.empty()) return out;
  const double t0 = track.frames.front().timestamp - 1e-9;
  const double t1 = track.frames.back().timestamp + 1e-9;
  for (const auto& o : obs)
    if (o.timestamp >= t0 && o.timestamp <= t1) out.push_back(o);
  return out;
}

template <class G>
struct Evaluation {
  PoseGraph<G> graph;
  OptimizationResult<G> result;
  ErrorReport report;

  /// Optimized poses at the sensor frames, as a track of the same source.
  OdometryTrack optimized_track() const {
    OdometryTrack t;
    t.source = graph.source;
    t.rate = graph.rate;
    t.mode = dof_mode_of<G>;
    for (std::size_t k = 0; k < graph.nodes.size(); ++k)
      if (graph.nodes[k].origin == NodeOrigin::frame)
        t.frames.push_back({graph.nodes[k].timestamp, to_pose3(result.state.poses[k])});
    return t;
  }
};

using AnyEvaluation = std::variant<Evaluation<Pose2>, Evaluation<Pose3>>;

template <class G>
Evaluation<G> evaluate_as(const OdometryTrack& track,
                          const std::vector<LandmarkObservation>& observations,
                          const LandmarkLayout& layout, const SolverSettings& solver,
                          const GraphOptions& options = {}) {
  const AlignedSequence aligned = align(track, observations);
  Evaluation<G> ev{build_graph<G>(aligned, layout, options), {}, {}};
  ev.result = optimize(ev.graph, solver);
  ev.report = per_frame_corrections(ev.graph, ev.result);
  ev.report.frames = track.frames.size();
  return ev;
}

inline AnyEvaluation evaluate(const OdometryTrack& track,
                              const std::vector<LandmarkObservation>& observations,
                              const LandmarkLayout& layout, const SolverSettings& solver,
                              DofMode mode, const GraphOptions& options = {}) {
  if (mode == DofMode::planar)
    return evaluate_as<Pose2>(track, observations, layout, solver, options);
  return evaluate_as<Pose3>(track, observations, layout, solver, options);
}

inline const ErrorReport& report_of(const AnyEvaluation& ev) {
  return std::visit([](const auto& e) -> const ErrorReport& { return e.report; }, ev);
}

}  // namespace pgval
