#pragma once

// Pose graph: robot nodes, odometry edges, pole observation edges against a
// rigid landmark template with a single free world placement.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <type_traits>
#include <vector>

#include "pgval/geometry.hpp"
#include "pgval/sync.hpp"
#include "pgval/tunnel_sim.hpp"
#include "pgval/types.hpp"

namespace pgval {

template <class G>
inline constexpr DofMode dof_mode_of =
    std::is_same_v<G, Pose2> ? DofMode::planar : DofMode::full3d;

template <class G>
struct GraphNode {
  double timestamp = 0.0;
  G pose;
  NodeOrigin origin = NodeOrigin::frame;
};

template <class G>
struct OdometryEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  G measured;
  InformationWeights weights;
};

template <class G>
struct ObservationEdge {
  std::size_t node = 0;
  int pole = 0;
  G measured;  // robot -> pole
  InformationWeights weights;
};

/// Values of all variables: one pose per robot node plus the landmark frame.
template <class G>
struct GraphState {
  std::vector<G> poses;
  G landmark_frame;
};

struct GraphOptions {
  /// Observation residual on the pole position only (rotation ignored).
  bool position_only = false;
};

template <class G>
struct PoseGraph {
  using Tangent = typename G::Tangent;
  using Jacobian = typename G::Jacobian;

  std::string source;
  double rate = 1.0;
  std::vector<GraphNode<G>> nodes;
  G landmark_frame;             // initial placement of the template
  std::vector<G> template_poses;
  std::vector<OdometryEdge<G>> odometry;
  std::vector<ObservationEdge<G>> observations;
  std::size_t gauge = 0;
  bool unconstrained = false;
  bool position_only = false;

  static constexpr DofMode mode() { return dof_mode_of<G>; }

  GraphState<G> initial_state() const {
    GraphState<G> state;
    state.poses.reserve(nodes.size());
    for (const auto& n : nodes) state.poses.push_back(n.pose);
    state.landmark_frame = landmark_frame;
    return state;
  }

  G pole_world_pose(const GraphState<G>& state, int pole) const {
    return state.landmark_frame * template_poses.at(static_cast<std::size_t>(pole));
  }

  std::size_t edge_count() const { return odometry.size() + observations.size(); }

  /// Every node reachable from the gauge node; the landmark frame counts as
  /// one extra vertex.
  bool is_connected() const {
    const std::size_t n = nodes.size();
    if (n == 0) return false;
    std::vector<std::size_t> parent(n + 1);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };
    for (const auto& e : odometry) unite(e.from, e.to);
    for (const auto& e : observations) unite(e.node, n);
    const std::size_t root = find(gauge);
    for (std::size_t k = 0; k < n; ++k)
      if (find(k) != root) return false;
    return true;
  }

  void validate() const {
    if (nodes.empty()) throw DataError("pose graph has no nodes");
    if (gauge >= nodes.size()) throw DataError("gauge node index out of range");
    for (const auto& e : odometry)
      if (e.from >= nodes.size() || e.to >= nodes.size() || e.from == e.to)
        throw DataError("odometry edge references a missing node");
    for (const auto& e : observations) {
      if (e.node >= nodes.size())
        throw DataError("observation edge references a missing node");
      if (e.pole < 0 || static_cast<std::size_t>(e.pole) >= template_poses.size())
        throw DataError("observation edge references unknown pole " +
                        std::to_string(e.pole));
    }
    if (!is_connected()) throw DataError("pose graph is not connected");
  }
};

/// Residual of one edge and its weighted squared norm r' W r.
template <class G>
struct EdgeResidual {
  typename G::Tangent vector;
  double weighted_sq_norm = 0.0;
};

/// Residual with Jacobians w.r.t. right perturbations of the two variables
/// (node, node) for odometry edges and (node, landmark frame) for observations.
template <class G>
struct EdgeLinearization {
  typename G::Tangent residual;
  typename G::Jacobian wrt_a;
  typename G::Jacobian wrt_b;
};

template <class G>
typename G::Tangent information_diagonal(const InformationWeights& w) {
  typename G::Tangent d;
  d.template head<G::kTransDim>().setConstant(w.translational);
  d.template tail<G::kDof - G::kTransDim>().setConstant(w.rotational);
  return d;
}

template <class G>
double weighted_sq_norm(const typename G::Tangent& r, const InformationWeights& w) {
  return r.dot(information_diagonal<G>(w).cwiseProduct(r));
}

/// log(measured^-1 * a^-1 * b)
template <class G>
typename G::Tangent between_residual(const G& measured, const G& a, const G& b) {
  return (measured.inverse() * relative(a, b)).log();
}

template <class G>
EdgeLinearization<G> linearize_between(const G& measured, const G& a, const G& b) {
  const G d = relative(a, b);
  EdgeLinearization<G> lin;
  lin.residual = (measured.inverse() * d).log();
  const typename G::Jacobian j_inv = G::right_jacobian_inverse(lin.residual);
  lin.wrt_b = j_inv;
  lin.wrt_a = -j_inv * d.inverse().adjoint();
  return lin;
}

namespace detail {

inline Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

// Position-only observation: r = translation(a^-1 * L * T) - translation(Z),
// rotational rows zero.
inline EdgeLinearization<Pose3> linearize_position(const Pose3& measured,
                                                   const Pose3& a,
                                                   const Pose3& landmark,
                                                   const Pose3& tmpl) {
  const Pose3 pole = landmark * tmpl;
  const Mat3 ra_t = a.rotation_matrix().transpose();
  const Vec3 q = ra_t * (pole.translation() - a.translation());
  EdgeLinearization<Pose3> lin;
  lin.residual.setZero();
  lin.residual.head<3>() = q - measured.translation();
  lin.wrt_a.setZero();
  lin.wrt_a.topLeftCorner<3, 3>() = -Mat3::Identity();
  lin.wrt_a.topRightCorner<3, 3>() = skew(q);
  const Mat3 m = ra_t * landmark.rotation_matrix();
  lin.wrt_b.setZero();
  lin.wrt_b.topLeftCorner<3, 3>() = m;
  lin.wrt_b.topRightCorner<3, 3>() = -m * skew(tmpl.translation());
  return lin;
}

inline EdgeLinearization<Pose2> linearize_position(const Pose2& measured,
                                                   const Pose2& a,
                                                   const Pose2& landmark,
                                                   const Pose2& tmpl) {
  const Pose2 pole = landmark * tmpl;
  const Mat2 ra_t = a.rotation_matrix().transpose();
  const Vec2 q = ra_t * (pole.translation() - a.translation());
  EdgeLinearization<Pose2> lin;
  lin.residual.setZero();
  lin.residual.head<2>() = q - measured.translation();
  lin.wrt_a.setZero();
  lin.wrt_a.topLeftCorner<2, 2>() = -Mat2::Identity();
  lin.wrt_a.block<2, 1>(0, 2) = -perp(q);
  const Mat2 m = ra_t * landmark.rotation_matrix();
  lin.wrt_b.setZero();
  lin.wrt_b.topLeftCorner<2, 2>() = m;
  lin.wrt_b.block<2, 1>(0, 2) = m * perp(tmpl.translation());
  return lin;
}

}  // namespace detail

template <class G>
EdgeLinearization<G> linearize(const PoseGraph<G>& /*graph*/, const GraphState<G>& state,
                               const OdometryEdge<G>& edge) {
  return linearize_between(edge.measured, state.poses[edge.from], state.poses[edge.to]);
}

template <class G>
EdgeLinearization<G> linearize(const PoseGraph<G>& graph, const GraphState<G>& state,
                               const ObservationEdge<G>& edge) {
  const G& tmpl = graph.template_poses[static_cast<std::size_t>(edge.pole)];
  if (graph.position_only)
    return detail::linearize_position(edge.measured, state.poses[edge.node],
                                      state.landmark_frame, tmpl);
  EdgeLinearization<G> lin = linearize_between(
      edge.measured, state.poses[edge.node], state.landmark_frame * tmpl);
  lin.wrt_b = lin.wrt_b * tmpl.inverse().adjoint();
  return lin;
}

template <class G>
typename G::Tangent residual_vector(const PoseGraph<G>& /*graph*/, const GraphState<G>& state,
                                    const OdometryEdge<G>& edge) {
  return between_residual(edge.measured, state.poses[edge.from], state.poses[edge.to]);
}

template <class G>
typename G::Tangent residual_vector(const PoseGraph<G>& graph, const GraphState<G>& state,
                                    const ObservationEdge<G>& edge) {
  const G pole = graph.pole_world_pose(state, edge.pole);
  const G& robot = state.poses[edge.node];
  if (graph.position_only) {
    typename G::Tangent r = G::Tangent::Zero();
    r.template head<G::kTransDim>() =
        relative(robot, pole).translation() - edge.measured.translation();
    return r;
  }
  return between_residual(edge.measured, robot, pole);
}

template <class G, class Edge>
EdgeResidual<G> residual(const PoseGraph<G>& graph, const GraphState<G>& state,
                         const Edge& edge) {
  EdgeResidual<G> out;
  out.vector = residual_vector(graph, state, edge);
  out.weighted_sq_norm = weighted_sq_norm<G>(out.vector, edge.weights);
  return out;
}

/// Huber kernel on the weighted residual norm; delta <= 0 is plain squares.
inline double robust_cost(double sq_norm, double delta) {
  if (delta <= 0.0 || sq_norm <= delta * delta) return sq_norm;
  return 2.0 * delta * std::sqrt(sq_norm) - delta * delta;
}

inline double robust_weight(double sq_norm, double delta) {
  if (delta <= 0.0 || sq_norm <= delta * delta) return 1.0;
  return delta / std::sqrt(sq_norm);
}

/// Sum of edge costs: odometry edges in order, then observation edges.
/// The Huber kernel (if enabled) applies to observation edges.
template <class G>
double total_cost(const PoseGraph<G>& graph, const GraphState<G>& state,
                  double huber_delta = 0.0) {
  double cost = 0.0;
  for (const auto& e : graph.odometry) cost += residual(graph, state, e).weighted_sq_norm;
  for (const auto& e : graph.observations)
    cost += robust_cost(residual(graph, state, e).weighted_sq_norm, huber_delta);
  return cost;
}

/// Builds the graph with nodes initialized from the raw track poses. The
/// landmark frame is initialized from the first observation so that the
/// observed pole is predicted exactly. Observations with zero information
/// carry no constraint and are dropped.
template <class G>
PoseGraph<G> build_graph(const AlignedSequence& aligned, const LandmarkLayout& layout,
                         const GraphOptions& options = {}) {
  layout.validate();
  if (aligned.nodes.empty()) throw DataError("aligned sequence is empty");

  PoseGraph<G> graph;
  graph.source = aligned.source;
  graph.rate = aligned.rate;
  graph.position_only = options.position_only;
  graph.gauge = 0;
  for (const Pose3& t : layout.template_poses()) graph.template_poses.push_back(from_pose3<G>(t));

  graph.nodes.reserve(aligned.nodes.size());
  for (const auto& n : aligned.nodes)
    graph.nodes.push_back({n.timestamp, from_pose3<G>(n.pose), n.origin});

  graph.odometry.reserve(aligned.measurements.size());
  for (const auto& m : aligned.measurements) {
    if (m.weights.translational < 0.0 || m.weights.rotational < 0.0)
      throw DataError("negative odometry information weight");
    graph.odometry.push_back({m.from, m.to, from_pose3<G>(m.relative_pose), m.weights});
  }

  for (const auto& att : aligned.observations) {
    const LandmarkObservation& obs = att.observation;
    if (obs.pole_id < 0 || obs.pole_id >= layout.count)
      throw DataError("observation of pole " + std::to_string(obs.pole_id) +
                      " not in the landmark template");
    if (obs.weights.translational < 0.0 || obs.weights.rotational < 0.0)
      throw DataError("negative observation information weight");
    if (obs.weights.translational == 0.0 &&
        (obs.weights.rotational == 0.0 || options.position_only))
      continue;
    graph.observations.push_back(
        {att.node, obs.pole_id, from_pose3<G>(obs.relative_pose), obs.weights});
  }

  if (graph.observations.empty()) {
    graph.unconstrained = true;
  } else {
    const auto& first = graph.observations.front();
    graph.landmark_frame =
        graph.nodes[first.node].pose * first.measured *
        graph.template_poses[static_cast<std::size_t>(first.pole)].inverse();
  }
  graph.validate();
  return graph;
}

}  // namespace pgval
