#pragma once

// Levenberg-Marquardt on the pose manifold with a sparse Cholesky solve.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "pgval/graph.hpp"

namespace pgval {

enum class JacobianMode { analytic, numeric };

inline std::string_view to_string(JacobianMode mode) {
  return mode == JacobianMode::analytic ? "analytic" : "numeric";
}

struct SolverSettings {
  int max_iterations = 100;
  double cost_threshold = 1e-9;    // relative cost decrease
  double update_threshold = 1e-10; // tangent update norm
  double initial_damping = 1e-6;
  double damping_increase = 10.0;
  double damping_decrease = 0.1;
  JacobianMode jacobian = JacobianMode::analytic;
  double huber_delta = 0.0;        // <= 0 disables the robust kernel

  void validate() const {
    if (max_iterations < 1) throw ConfigError("solver.max_iterations must be >= 1");
    if (!(cost_threshold > 0.0)) throw ConfigError("solver.cost_threshold must be > 0");
    if (!(update_threshold > 0.0)) throw ConfigError("solver.update_threshold must be > 0");
    if (!(initial_damping > 0.0)) throw ConfigError("solver.initial_damping must be > 0");
    if (!(damping_increase > 1.0)) throw ConfigError("solver.damping_increase must be > 1");
    if (!(damping_decrease > 0.0 && damping_decrease < 1.0))
      throw ConfigError("solver.damping_decrease must be in (0, 1)");
    if (!(huber_delta >= 0.0)) throw ConfigError("solver.huber_delta must be >= 0");
  }

  bool operator==(const SolverSettings&) const = default;
};

enum class ConvergenceReason { cost_threshold, update_threshold, max_iterations };

inline std::string_view to_string(ConvergenceReason r) {
  switch (r) {
    case ConvergenceReason::cost_threshold: return "cost-threshold";
    case ConvergenceReason::update_threshold: return "update-threshold";
    case ConvergenceReason::max_iterations: return "max-iterations";
  }
  return "unknown";
}

struct SolveStats {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  ConvergenceReason reason = ConvergenceReason::max_iterations;
  std::vector<double> cost_trace;  // initial cost, then every accepted step
};

template <class G>
struct OptimizationResult {
  GraphState<G> state;
  SolveStats stats;
};

inline constexpr double kMaxDamping = 1e8;
inline constexpr double kNumericStep = 1e-6;

namespace detail {

template <class G, class F>
typename G::Jacobian numeric_jacobian(F&& residual_of, const G& x) {
  typename G::Jacobian j;
  for (int k = 0; k < G::kDof; ++k) {
    typename G::Tangent step = G::Tangent::Zero();
    step[k] = kNumericStep;
    j.col(k) = (residual_of(x.retract(step)) - residual_of(x.retract(-step))) /
               (2.0 * kNumericStep);
  }
  return j;
}

}  // namespace detail

/// Central-difference Jacobians of an edge residual.
template <class G>
EdgeLinearization<G> linearize_numeric(const PoseGraph<G>& graph, const GraphState<G>& state,
                                       const OdometryEdge<G>& edge) {
  EdgeLinearization<G> lin;
  lin.residual = residual_vector(graph, state, edge);
  const G& a = state.poses[edge.from];
  const G& b = state.poses[edge.to];
  lin.wrt_a = detail::numeric_jacobian<G>(
      [&](const G& x) { return between_residual(edge.measured, x, b); }, a);
  lin.wrt_b = detail::numeric_jacobian<G>(
      [&](const G& x) { return between_residual(edge.measured, a, x); }, b);
  return lin;
}

template <class G>
EdgeLinearization<G> linearize_numeric(const PoseGraph<G>& graph, const GraphState<G>& state,
                                       const ObservationEdge<G>& edge) {
  EdgeLinearization<G> lin;
  lin.residual = residual_vector(graph, state, edge);
  GraphState<G> probe;
  probe.poses = {state.poses[edge.node]};
  probe.landmark_frame = state.landmark_frame;
  ObservationEdge<G> local = edge;
  local.node = 0;
  lin.wrt_a = detail::numeric_jacobian<G>(
      [&](const G& x) {
        GraphState<G> s{{x}, probe.landmark_frame};
        return residual_vector(graph, s, local);
      },
      probe.poses[0]);
  lin.wrt_b = detail::numeric_jacobian<G>(
      [&](const G& x) {
        GraphState<G> s{probe.poses, x};
        return residual_vector(graph, s, local);
      },
      probe.landmark_frame);
  return lin;
}

/// Sparse LM solver. Variables: every robot node except the gauge node, plus
/// the landmark frame when the graph has observations.
template <class G>
class LevenbergMarquardt {
 public:
  static constexpr int kDof = G::kDof;
  using Tangent = typename G::Tangent;
  using Jacobian = typename G::Jacobian;

  LevenbergMarquardt(const PoseGraph<G>& graph, SolverSettings settings)
      : graph_(graph), settings_(settings) {
    settings_.validate();
    graph_.validate();
    const std::size_t n = graph_.nodes.size();
    node_var_.assign(n, kFixed);
    int next = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != graph_.gauge) node_var_[k] = next++;
    landmark_var_ = graph_.observations.empty() ? kFixed : next++;
    num_vars_ = next;
  }

  OptimizationResult<G> solve() const {
    OptimizationResult<G> out;
    out.state = graph_.initial_state();
    SolveStats& stats = out.stats;
    double cost = total_cost(graph_, out.state, settings_.huber_delta);
    stats.initial_cost = cost;
    stats.cost_trace.push_back(cost);
    stats.final_cost = cost;

    if (num_vars_ == 0) {
      stats.reason = ConvergenceReason::update_threshold;
      return out;
    }

    const Eigen::Index dim = static_cast<Eigen::Index>(num_vars_) * kDof;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>>
        solver;
    bool analyzed = false;
    double lambda = settings_.initial_damping;

    for (int iter = 1; iter <= settings_.max_iterations; ++iter) {
      stats.iterations = iter;
      Eigen::SparseMatrix<double> hessian(dim, dim);
      Eigen::VectorXd gradient = Eigen::VectorXd::Zero(dim);
      assemble(out.state, hessian, gradient);
      if (!analyzed) {
        solver.analyzePattern(hessian);
        analyzed = true;
      }
      const Eigen::VectorXd diag = hessian.diagonal();

      bool accepted = false;
      for (;;) {
        Eigen::SparseMatrix<double> damped = hessian;
        for (Eigen::Index i = 0; i < dim; ++i)
          damped.coeffRef(i, i) += lambda * std::max(diag[i], 1e-9);
        solver.factorize(damped);
        if (solver.info() != Eigen::Success) {
          lambda *= settings_.damping_increase;
          if (lambda > kMaxDamping)
            throw ConditioningError(
                "normal equations not solvable at iteration " + std::to_string(iter) +
                    " (damping > 1e8)",
                iter);
          continue;
        }
        const Eigen::VectorXd delta = solver.solve(-gradient);
        if (!delta.allFinite())
          throw ConditioningError(
              "non-finite update at iteration " + std::to_string(iter), iter);
        if (delta.norm() <= settings_.update_threshold) {
          stats.reason = ConvergenceReason::update_threshold;
          stats.final_cost = cost;
          return out;
        }
        GraphState<G> candidate = retract(out.state, delta);
        const double new_cost = total_cost(graph_, candidate, settings_.huber_delta);
        if (std::isfinite(new_cost) && new_cost < cost) {
          const double decrease = (cost - new_cost) / cost;
          out.state = std::move(candidate);
          cost = new_cost;
          stats.cost_trace.push_back(cost);
          stats.final_cost = cost;
          lambda = std::max(lambda * settings_.damping_decrease, 1e-12);
          accepted = true;
          if (decrease < settings_.cost_threshold) {
            stats.reason = ConvergenceReason::cost_threshold;
            return out;
          }
          break;
        }
        lambda *= settings_.damping_increase;
        if (lambda > kMaxDamping) break;
      }
      if (!accepted) {
        // No step decreases the cost any further.
        stats.reason = ConvergenceReason::cost_threshold;
        return out;
      }
    }
    stats.reason = ConvergenceReason::max_iterations;
    return out;
  }

 private:
  static constexpr int kFixed = -1;

  template <class Edge>
  EdgeLinearization<G> linearize_edge(const GraphState<G>& state, const Edge& e) const {
    return settings_.jacobian == JacobianMode::analytic ? linearize(graph_, state, e)
                                                        : linearize_numeric(graph_, state, e);
  }

  void add_edge(std::vector<Eigen::Triplet<double>>& triplets, Eigen::VectorXd& gradient,
                const EdgeLinearization<G>& lin, const InformationWeights& weights,
                double robust, int var_a, int var_b) const {
    const Tangent info = robust * information_diagonal<G>(weights);
    const Tangent weighted_r = info.cwiseProduct(lin.residual);
    const Jacobian ja_t_w = lin.wrt_a.transpose() * info.asDiagonal();
    const Jacobian jb_t_w = lin.wrt_b.transpose() * info.asDiagonal();
    auto put = [&](int row_var, int col_var, const Jacobian& block) {
      const int r0 = row_var * kDof;
      const int c0 = col_var * kDof;
      for (int i = 0; i < kDof; ++i)
        for (int j = 0; j < kDof; ++j) triplets.emplace_back(r0 + i, c0 + j, block(i, j));
    };
    if (var_a != kFixed) {
      gradient.segment<kDof>(var_a * kDof) += lin.wrt_a.transpose() * weighted_r;
      put(var_a, var_a, ja_t_w * lin.wrt_a);
    }
    if (var_b != kFixed) {
      gradient.segment<kDof>(var_b * kDof) += lin.wrt_b.transpose() * weighted_r;
      put(var_b, var_b, jb_t_w * lin.wrt_b);
    }
    if (var_a != kFixed && var_b != kFixed) {
      const Jacobian cross = ja_t_w * lin.wrt_b;
      put(var_a, var_b, cross);
      put(var_b, var_a, cross.transpose());
    }
  }

  void assemble(const GraphState<G>& state, Eigen::SparseMatrix<double>& hessian,
                Eigen::VectorXd& gradient) const {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve((graph_.odometry.size() + graph_.observations.size()) * 4 * kDof * kDof);
    for (const auto& e : graph_.odometry) {
      add_edge(triplets, gradient, linearize_edge(state, e), e.weights, 1.0,
               node_var_[e.from], node_var_[e.to]);
    }
    for (const auto& e : graph_.observations) {
      const EdgeLinearization<G> lin = linearize_edge(state, e);
      const double w =
          robust_weight(weighted_sq_norm<G>(lin.residual, e.weights), settings_.huber_delta);
      add_edge(triplets, gradient, lin, e.weights, w, node_var_[e.node], landmark_var_);
    }
    hessian.setFromTriplets(triplets.begin(), triplets.end());
  }

  GraphState<G> retract(const GraphState<G>& state, const Eigen::VectorXd& delta) const {
    GraphState<G> out = state;
    for (std::size_t k = 0; k < out.poses.size(); ++k) {
      const int v = node_var_[k];
      if (v == kFixed) continue;
      out.poses[k] = out.poses[k].retract(delta.segment<kDof>(v * kDof));
    }
    if (landmark_var_ != kFixed)
      out.landmark_frame =
          out.landmark_frame.retract(delta.segment<kDof>(landmark_var_ * kDof));
    return out;
  }

  PoseGraph<G> graph_;
  SolverSettings settings_;
  std::vector<int> node_var_;
  int landmark_var_ = kFixed;
  int num_vars_ = 0;
};

template <class G>
OptimizationResult<G> optimize(const PoseGraph<G>& graph, const SolverSettings& settings = {}) {
  return LevenbergMarquardt<G>(graph, settings).solve();
}

/// Largest absolute difference between analytic and central-difference edge
/// Jacobians, over `probe_count` randomly chosen edges evaluated at randomly
/// perturbed states.
template <class G>
double check_jacobians(const PoseGraph<G>& graph, int probe_count, std::uint64_t seed = 7,
                       double perturbation = 0.5) {
  const std::size_t edges = graph.edge_count();
  if (edges == 0 || probe_count <= 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, edges - 1);
  std::uniform_real_distribution<double> jitter(-perturbation, perturbation);
  auto random_tangent = [&] {
    typename G::Tangent t;
    for (int k = 0; k < G::kDof; ++k) t[k] = jitter(rng);
    return t;
  };

  const GraphState<G> base = graph.initial_state();
  double worst = 0.0;
  for (int p = 0; p < probe_count; ++p) {
    const std::size_t idx = pick(rng);
    GraphState<G> state;
    state.landmark_frame = base.landmark_frame.retract(random_tangent());
    if (idx < graph.odometry.size()) {
      OdometryEdge<G> e = graph.odometry[idx];
      state.poses = {base.poses[e.from].retract(random_tangent()),
                     base.poses[e.to].retract(random_tangent())};
      e.from = 0;
      e.to = 1;
      const auto a = linearize(graph, state, e);
      const auto n = linearize_numeric(graph, state, e);
      worst = std::max({worst, (a.wrt_a - n.wrt_a).cwiseAbs().maxCoeff(),
                        (a.wrt_b - n.wrt_b).cwiseAbs().maxCoeff()});
    } else {
      ObservationEdge<G> e = graph.observations[idx - graph.odometry.size()];
      state.poses = {base.poses[e.node].retract(random_tangent())};
      e.node = 0;
      const auto a = linearize(graph, state, e);
      const auto n = linearize_numeric(graph, state, e);
      worst = std::max({worst, (a.wrt_a - n.wrt_a).cwiseAbs().maxCoeff(),
                        (a.wrt_b - n.wrt_b).cwiseAbs().maxCoeff()});
    }
  }
  return worst;
}

}  // namespace pgval
