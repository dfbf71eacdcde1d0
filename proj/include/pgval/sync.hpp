#pragma once

// Alignment of an odometry track with landmark observation timestamps.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "pgval/geometry.hpp"
#include "pgval/types.hpp"

namespace pgval {

enum class NodeOrigin { frame, observation };

struct AlignedNode {
  double timestamp = 0.0;
  Pose3 pose;
  NodeOrigin origin = NodeOrigin::frame;
};

struct OdometryMeasurement {
  std::size_t from = 0;
  std::size_t to = 0;
  Pose3 relative_pose;
  InformationWeights weights;
};

struct AttachedObservation {
  std::size_t node = 0;
  LandmarkObservation observation;
};

struct AlignedSequence {
  std::string source;
  double rate = 1.0;
  DofMode mode = DofMode::full3d;
  std::vector<AlignedNode> nodes;
  std::vector<OdometryMeasurement> measurements;
  std::vector<AttachedObservation> observations;

  std::size_t inserted_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes) n += node.origin == NodeOrigin::observation;
    return n;
  }
};

struct Dropout {
  double start = 0.0;
  double duration = 0.0;
};

namespace detail {

inline bool same_time(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a));
}

inline std::string format_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", t);
  return buf;
}

}  // namespace detail

inline void validate_track(const OdometryTrack& track) {
  if (track.frames.empty()) throw DataError("odometry track is empty");
  if (!(track.rate > 0.0)) throw DataError("odometry track rate must be > 0");
  for (std::size_t k = 1; k < track.frames.size(); ++k) {
    const double t0 = track.frames[k - 1].timestamp;
    const double t1 = track.frames[k].timestamp;
    if (!(t1 > t0))
      throw DataError("non-increasing timestamps " + detail::format_time(t0) +
                      " and " + detail::format_time(t1));
  }
}

/// Gaps longer than 1.25 nominal periods.
inline std::vector<Dropout> detect_dropouts(const OdometryTrack& track) {
  std::vector<Dropout> gaps;
  const double limit = 1.25 / track.rate;
  for (std::size_t k = 1; k < track.frames.size(); ++k) {
    const double dt = track.frames[k].timestamp - track.frames[k - 1].timestamp;
    if (dt > limit) gaps.push_back({track.frames[k - 1].timestamp, dt});
  }
  return gaps;
}

/// Inserts interpolated nodes at observation times that fall between frames
/// and attaches every observation to the node at its timestamp. A split
/// increment of fraction a of the frame gap gets information w / a.
inline AlignedSequence align(const OdometryTrack& track,
                             const std::vector<LandmarkObservation>& observations) {
  validate_track(track);
  const Trajectory& frames = track.frames;
  const double t_first = frames.front().timestamp;
  const double t_last = frames.back().timestamp;
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const double t = observations[k].timestamp;
    if ((t < t_first && !detail::same_time(t, t_first)) ||
        (t > t_last && !detail::same_time(t, t_last)))
      throw DataError("observation timestamp " + detail::format_time(t) +
                      " outside track span [" + detail::format_time(t_first) +
                      ", " + detail::format_time(t_last) + "]");
    if (k > 0 && t < observations[k - 1].timestamp)
      throw DataError("observations not sorted by time at " +
                      detail::format_time(t));
  }

  AlignedSequence out;
  out.source = track.source;
  out.rate = track.rate;
  out.mode = track.mode;
  out.nodes.reserve(frames.size() + observations.size());
  out.observations.reserve(observations.size());

  std::size_t next_obs = 0;
  auto attach_at = [&](std::size_t node, double t) {
    while (next_obs < observations.size() &&
           detail::same_time(observations[next_obs].timestamp, t)) {
      out.observations.push_back({node, observations[next_obs]});
      ++next_obs;
    }
  };

  out.nodes.push_back({frames.front().timestamp, frames.front().pose, NodeOrigin::frame});
  // Observations slightly before the first frame (within tolerance) snap to it.
  attach_at(0, frames.front().timestamp);

  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    const StampedPose& a = frames[k];
    const StampedPose& b = frames[k + 1];
    const double gap = b.timestamp - a.timestamp;
    double seg_start = a.timestamp;
    while (next_obs < observations.size() &&
           observations[next_obs].timestamp < b.timestamp &&
           !detail::same_time(observations[next_obs].timestamp, b.timestamp)) {
      const double t = observations[next_obs].timestamp;
      if (detail::same_time(t, out.nodes.back().timestamp)) {
        attach_at(out.nodes.size() - 1, out.nodes.back().timestamp);
        continue;
      }
      const double alpha = (t - a.timestamp) / gap;
      const std::size_t from = out.nodes.size() - 1;
      out.nodes.push_back({t, interpolate(a.pose, b.pose, alpha), NodeOrigin::observation});
      const double fraction = (t - seg_start) / gap;
      out.measurements.push_back(
          {from, from + 1,
           relative(out.nodes[from].pose, out.nodes[from + 1].pose),
           track.weights.scaled(1.0 / fraction)});
      seg_start = t;
      attach_at(from + 1, t);
    }
    const std::size_t from = out.nodes.size() - 1;
    out.nodes.push_back({b.timestamp, b.pose, NodeOrigin::frame});
    const double fraction = (b.timestamp - seg_start) / gap;
    out.measurements.push_back(
        {from, from + 1, relative(out.nodes[from].pose, out.nodes[from + 1].pose),
         track.weights.scaled(1.0 / fraction)});
    attach_at(from + 1, b.timestamp);
  }
  return out;
}

}  // namespace pgval
