#pragma once

// Shared problem setups for the unit and acceptance suites.

#include <vector>

#include "oracles.hpp"
#include "pgval/pipeline.hpp"

namespace fixtures {

using namespace pgval;

// Three planar nodes, two 1 m odometry edges, one pole seen from node 0 at
// 2.2 m and again from node 2 as coincident. The pole sighting from node 0
// fixes the landmark frame; the one from node 2 pulls the chain out to it.
struct ThreeNode {
  PoseGraph<Pose2> graph;
  std::vector<oracle::Se2Edge> edges;  // variables: x1, x2, landmark
};

inline ThreeNode three_node_problem() {
  ThreeNode p;
  PoseGraph<Pose2>& g = p.graph;
  g.source = "oracle";
  g.rate = 1.0;
  g.nodes = {{0.0, Pose2(0, 0, 0), NodeOrigin::frame},
             {1.0, Pose2(1, 0, 0), NodeOrigin::frame},
             {2.0, Pose2(2.0, 0.02, 0.01), NodeOrigin::frame}};
  g.template_poses = {Pose2::identity()};
  const Pose2 odo1(1.0, 0.0, 0.0), odo2(1.0, 0.02, 0.01);
  const Pose2 z0(2.2, 0.05, 0.03), z2(0.0, 0.0, 0.0);
  g.odometry = {{0, 1, odo1, {1.0, 1.0}}, {1, 2, odo2, {1.0, 1.0}}};
  g.observations = {{0, 0, z0, {1.0, 1.0}}, {2, 0, z2, {1.0, 1.0}}};
  g.landmark_frame = z0;
  g.validate();

  auto se2 = [](const Pose2& q) { return oracle::Se2{q.x(), q.y(), q.yaw()}; };
  p.edges = {{-1, 0, se2(odo1), 1.0, 1.0},
             {0, 1, se2(odo2), 1.0, 1.0},
             {-1, 2, se2(z0), 1.0, 1.0},
             {1, 2, se2(z2), 1.0, 1.0}};
  return p;
}

// Brute-force minimum of the same cost, as (x1, y1, t1, x2, y2, t2, lx, ly, lt).
inline std::vector<double> three_node_oracle(const ThreeNode& p) {
  auto f = [&](const std::vector<double>& v) {
    std::vector<oracle::Se2> vars = {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}};
    return oracle::cost(vars, p.edges);
  };
  std::vector<double> start;
  for (const Pose2& q : {p.graph.nodes[1].pose, p.graph.nodes[2].pose, p.graph.landmark_frame}) {
    start.push_back(q.x());
    start.push_back(q.y());
    start.push_back(q.yaw());
  }
  return oracle::brute_force_minimize(f, start, 0.2, 5, 1e-7);
}

// Default scenario with every noise source switched off.
inline ScenarioConfig noiseless_config() {
  ScenarioConfig c;
  for (auto& s : c.sources) {
    s.noise.trans_error = 0.0;
    s.noise.rot_error_deg = 0.0;
  }
  c.detection.trans_sigma = 0.0;
  c.detection.rot_sigma_deg = 0.0;
  return c;
}

inline ScenarioConfig single_source(ScenarioConfig c, const std::string& name) {
  const SourceConfig keep = *c.find_source(name);
  c.sources = {keep};
  return c;
}

}  // namespace fixtures
