#pragma once

// Odometry error as per-frame correction magnitudes, plus closure and ATE.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "pgval/graph.hpp"
#include "pgval/optimizer.hpp"

namespace pgval {

/// Increments rotating faster than this (deg/s) count as turn-phase frames.
inline constexpr double kTurnRateThresholdDeg = 5.0;

struct PhaseStats {
  std::size_t increments = 0;
  double mean_trans = 0.0;    // m/frame
  double mean_rot_deg = 0.0;  // deg/frame
};

struct ErrorReport {
  std::string source;
  double rate = 0.0;               // Hz
  std::size_t frames = 0;          // sensor frames in the track
  double trans_per_frame = 0.0;    // m/frame
  double rot_deg_per_frame = 0.0;  // deg/frame
  double trans_per_second = 0.0;   // m/s
  double rot_deg_per_second = 0.0; // deg/s
  double closure_raw = 0.0;        // m, planar
  double closure_optimized = 0.0;
  double closure_raw_vertical = 0.0;  // m, z component (full3d only)
  double closure_optimized_vertical = 0.0;
  bool unconstrained = false;
  PhaseStats straight;
  PhaseStats turn;
  std::optional<SolveStats> solver;
};

/// Fills the per-second columns as per-frame value times frame rate.
inline ErrorReport make_error_report(std::string source, double rate, std::size_t frames,
                                     double trans_per_frame, double rot_deg_per_frame) {
  ErrorReport r;
  r.source = std::move(source);
  r.rate = rate;
  r.frames = frames;
  r.trans_per_frame = trans_per_frame;
  r.rot_deg_per_frame = rot_deg_per_frame;
  r.trans_per_second = trans_per_frame * rate;
  r.rot_deg_per_second = rot_deg_per_frame * rate;
  return r;
}

struct FrameCorrection {
  double trans = 0.0;    // m
  double rot_deg = 0.0;
  bool turning = false;
};

/// log(measured^-1 * optimized), split into translational norm and angle.
template <class G>
FrameCorrection frame_correction(const G& measured, const G& optimized, double rate) {
  const typename G::Tangent c = (measured.inverse() * optimized).log();
  FrameCorrection fc;
  fc.trans = c.template head<G::kTransDim>().norm();
  fc.rot_deg = rad_to_deg(c.template tail<G::kDof - G::kTransDim>().norm());
  fc.turning = rotation_angle_deg(measured) * rate > kTurnRateThresholdDeg;
  return fc;
}

struct ClosureError {
  double planar = 0.0;
  double vertical = 0.0;
};

inline ClosureError closure_error(const Pose3& first, const Pose3& last, DofMode mode) {
  const Vec3 d = last.translation() - first.translation();
  return {d.head<2>().norm(), mode == DofMode::full3d ? std::abs(d.z()) : 0.0};
}

inline ClosureError closure_error(const Trajectory& traj, DofMode mode) {
  if (traj.size() < 2) throw DataError("closure error needs at least two poses");
  return closure_error(traj.front().pose, traj.back().pose, mode);
}

namespace detail {

inline void summarize(const std::vector<FrameCorrection>& corrections, ErrorReport& report) {
  double t_all = 0.0, r_all = 0.0;
  PhaseStats straight, turn;
  for (const auto& c : corrections) {
    t_all += c.trans;
    r_all += c.rot_deg;
    PhaseStats& phase = c.turning ? turn : straight;
    ++phase.increments;
    phase.mean_trans += c.trans;
    phase.mean_rot_deg += c.rot_deg;
  }
  for (PhaseStats* p : {&straight, &turn}) {
    if (p->increments == 0) continue;
    p->mean_trans /= static_cast<double>(p->increments);
    p->mean_rot_deg /= static_cast<double>(p->increments);
  }
  const double n = corrections.empty() ? 1.0 : static_cast<double>(corrections.size());
  ErrorReport filled = make_error_report(report.source, report.rate, report.frames,
                                         t_all / n, r_all / n);
  filled.straight = straight;
  filled.turn = turn;
  filled.closure_raw = report.closure_raw;
  filled.closure_optimized = report.closure_optimized;
  filled.closure_raw_vertical = report.closure_raw_vertical;
  filled.closure_optimized_vertical = report.closure_optimized_vertical;
  filled.unconstrained = report.unconstrained;
  filled.solver = report.solver;
  report = std::move(filled);
}

}  // namespace detail

/// Corrections between consecutive sensor frames. Edges split at inserted
/// observation nodes are composed back into one increment first.
template <class G>
ErrorReport per_frame_corrections(const PoseGraph<G>& graph, const OptimizationResult<G>& result) {
  ErrorReport report;
  report.source = graph.source;
  report.rate = graph.rate;
  report.unconstrained = graph.unconstrained;
  report.solver = result.stats;

  std::vector<std::size_t> frame_nodes;
  for (std::size_t k = 0; k < graph.nodes.size(); ++k)
    if (graph.nodes[k].origin == NodeOrigin::frame) frame_nodes.push_back(k);
  report.frames = frame_nodes.size();

  const auto& states = result.state.poses;
  if (frame_nodes.size() >= 2) {
    const DofMode mode = dof_mode_of<G>;
    const ClosureError raw = closure_error(to_pose3(graph.nodes[frame_nodes.front()].pose),
                                           to_pose3(graph.nodes[frame_nodes.back()].pose), mode);
    const ClosureError opt = closure_error(to_pose3(states[frame_nodes.front()]),
                                           to_pose3(states[frame_nodes.back()]), mode);
    report.closure_raw = raw.planar;
    report.closure_raw_vertical = raw.vertical;
    report.closure_optimized = opt.planar;
    report.closure_optimized_vertical = opt.vertical;
  }

  std::vector<FrameCorrection> corrections;
  corrections.reserve(frame_nodes.size());
  std::size_t edge = 0;
  for (std::size_t f = 0; f + 1 < frame_nodes.size(); ++f) {
    const std::size_t begin = frame_nodes[f];
    const std::size_t end = frame_nodes[f + 1];
    G measured = G::identity();
    std::size_t at = begin;
    // Odometry edges are stored in chain order.
    while (at != end) {
      while (edge < graph.odometry.size() && graph.odometry[edge].from != at) ++edge;
      if (edge == graph.odometry.size())
        throw DataError("odometry chain broken at node " + std::to_string(at));
      measured = measured * graph.odometry[edge].measured;
      at = graph.odometry[edge].to;
    }
    FrameCorrection c = frame_correction(measured, relative(states[begin], states[end]), graph.rate);
    if (graph.unconstrained) c.trans = c.rot_deg = 0.0;
    corrections.push_back(c);
  }
  detail::summarize(corrections, report);
  return report;
}

/// Same statistic from a raw track and an optimized track sharing timestamps.
inline ErrorReport per_frame_corrections(const OdometryTrack& raw, const OdometryTrack& optimized,
                                         DofMode mode) {
  if (raw.frames.size() != optimized.frames.size())
    throw DataError("raw and optimized tracks differ in frame count");
  for (std::size_t k = 0; k < raw.frames.size(); ++k)
    if (std::abs(raw.frames[k].timestamp - optimized.frames[k].timestamp) > 1e-9)
      throw DataError("raw and optimized tracks differ in timestamps");
  ErrorReport report;
  report.source = raw.source;
  report.rate = raw.rate;
  report.frames = raw.frames.size();
  if (raw.frames.size() >= 2) {
    const ClosureError r = closure_error(raw.frames, mode);
    const ClosureError o = closure_error(optimized.frames, mode);
    report.closure_raw = r.planar;
    report.closure_raw_vertical = r.vertical;
    report.closure_optimized = o.planar;
    report.closure_optimized_vertical = o.vertical;
  }
  std::vector<FrameCorrection> corrections;
  for (std::size_t k = 0; k + 1 < raw.frames.size(); ++k) {
    const Pose3 m = relative(raw.frames[k].pose, raw.frames[k + 1].pose);
    const Pose3 o = relative(optimized.frames[k].pose, optimized.frames[k + 1].pose);
    if (mode == DofMode::planar)
      corrections.push_back(frame_correction(
          project_planar(m),
          relative(project_planar(optimized.frames[k].pose),
                   project_planar(optimized.frames[k + 1].pose)),
          raw.rate));
    else
      corrections.push_back(frame_correction(m, o, raw.rate));
  }
  detail::summarize(corrections, report);
  return report;
}

/// RMS position error; with `align` the estimate is first moved by the
/// least-squares rigid transform onto the ground truth.
inline double ate_rmse(const Trajectory& estimate, const Trajectory& ground_truth,
                       bool align = true) {
  if (estimate.size() != ground_truth.size() || estimate.empty())
    throw DataError("ATE needs trajectories with identical timestamps");
  const std::size_t n = estimate.size();
  for (std::size_t k = 0; k < n; ++k)
    if (std::abs(estimate[k].timestamp - ground_truth[k].timestamp) > 1e-9)
      throw DataError("ATE timestamp mismatch at index " + std::to_string(k));

  Mat3 rot = Mat3::Identity();
  Vec3 shift = Vec3::Zero();
  if (align) {
    Vec3 mean_e = Vec3::Zero(), mean_g = Vec3::Zero();
    for (std::size_t k = 0; k < n; ++k) {
      mean_e += estimate[k].pose.translation();
      mean_g += ground_truth[k].pose.translation();
    }
    mean_e /= static_cast<double>(n);
    mean_g /= static_cast<double>(n);
    Mat3 cov = Mat3::Zero();
    for (std::size_t k = 0; k < n; ++k)
      cov += (ground_truth[k].pose.translation() - mean_g) *
             (estimate[k].pose.translation() - mean_e).transpose();
    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 s = Mat3::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) s(2, 2) = -1.0;
    rot = svd.matrixU() * s * svd.matrixV().transpose();
    shift = mean_g - rot * mean_e;
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    sum += (rot * estimate[k].pose.translation() + shift - ground_truth[k].pose.translation())
               .squaredNorm();
  return std::sqrt(sum / static_cast<double>(n));
}

}  // namespace pgval
