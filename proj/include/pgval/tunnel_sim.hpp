#pragma once

// Ground-truth tunnel runs, odometry corruption and landmark detections.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pgval/geometry.hpp"
#include "pgval/types.hpp"

namespace pgval {

/// Straight leg, in-place turn, optional return leg.
struct TrajectoryProfile {
  double straight_length = 100.0;  // m
  double turn_angle_deg = 180.0;
  double speed = 0.5;              // m/s
  double turn_rate_deg = 30.0;     // deg/s
  bool return_leg = true;

  void validate() const {
    if (!(straight_length > 0.0))
      throw ConfigError("trajectory.straight_length must be > 0");
    if (!(speed > 0.0)) throw ConfigError("trajectory.speed must be > 0");
    if (!(turn_rate_deg > 0.0))
      throw ConfigError("trajectory.turn_rate must be > 0");
    if (!(turn_angle_deg >= 0.0))
      throw ConfigError("trajectory.turn_angle must be >= 0");
  }

  double straight_duration() const { return straight_length / speed; }
  double turn_duration() const { return turn_angle_deg / turn_rate_deg; }
  double duration() const {
    return straight_duration() + turn_duration() +
           (return_leg ? straight_duration() : 0.0);
  }

  bool operator==(const TrajectoryProfile&) const = default;
};

/// Collinear, equally spaced poles. The template lives in a local landmark
/// frame; `lateral_offset` is only used for the default world placement.
struct LandmarkLayout {
  int count = 4;
  double spacing = 18.0;         // m
  double lateral_offset = 1.2;   // m, world y of the pole line

  void validate() const {
    if (count < 1) throw ConfigError("landmark.count must be >= 1");
    if (!(spacing > 0.0)) throw ConfigError("landmark.spacing must be > 0");
  }

  Pose3 template_pose(int pole) const {
    return Pose3::translate(static_cast<double>(pole) * spacing, 0.0, 0.0);
  }
  std::vector<Pose3> template_poses() const {
    std::vector<Pose3> poses;
    poses.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) poses.push_back(template_pose(k));
    return poses;
  }
  Pose3 default_world_placement() const {
    return Pose3::translate(0.0, lateral_offset, 0.0);
  }

  bool operator==(const LandmarkLayout&) const = default;
};

/// Fixed-magnitude per-frame odometry error model.
struct NoiseProfile {
  double trans_error = 0.0;    // m/frame
  double rot_error_deg = 0.0;  // deg/frame
  double frame_rate = 10.0;    // Hz
  DofMode mode = DofMode::full3d;
  Vec3 axis_scale = Vec3::Ones();

  static NoiseProfile dvso() { return {0.00148, 0.043, 5.0, DofMode::full3d, Vec3::Ones()}; }
  static NoiseProfile wheel() { return {0.00018, 0.002, 50.0, DofMode::planar, Vec3::Ones()}; }
  /// 2D LiDAR in a featureless corridor: wheel-grade per-second error at
  /// 10 Hz, inflated 50x along the tunnel (robot x) axis.
  static NoiseProfile degenerate_lidar() {
    return {0.0009, 0.01, 10.0, DofMode::planar, Vec3(50.0, 1.0, 1.0)};
  }

  void validate(const std::string& name = "noise") const {
    if (!(trans_error >= 0.0)) throw ConfigError(name + ".trans_error must be >= 0");
    if (!(rot_error_deg >= 0.0)) throw ConfigError(name + ".rot_error must be >= 0");
    if (!(frame_rate > 0.0)) throw ConfigError(name + ".rate must be > 0");
    if (!(axis_scale.minCoeff() >= 0.0))
      throw ConfigError(name + ".axis_scale components must be >= 0");
  }

  /// Isotropic information matching the second moment of the injected error.
  InformationWeights information() const {
    constexpr double kMinSigma = 1e-6;
    const bool planar = mode == DofMode::planar;
    const double trans_dims = planar ? 2.0 : 3.0;
    const double rot_dims = planar ? 1.0 : 3.0;
    const double scale_sq = planar ? (axis_scale.head<2>().squaredNorm() / 2.0)
                                   : (axis_scale.squaredNorm() / 3.0);
    const double trans_sq =
        std::max(trans_error * trans_error * scale_sq, kMinSigma * kMinSigma);
    const double rot = std::max(deg_to_rad(rot_error_deg), kMinSigma);
    return {trans_dims / trans_sq, rot_dims / (rot * rot)};
  }

  bool operator==(const NoiseProfile&) const = default;
};

/// Camera-side gating and noise for pole detections.
struct DetectionModel {
  double max_range = 6.0;         // m
  double max_bearing_deg = 50.0;  // from the robot forward axis
  double trans_sigma = 0.005;     // m
  double rot_sigma_deg = 0.2;
  double rate = 2.0;              // Hz

  void validate() const {
    if (!(max_range > 0.0)) throw ConfigError("detection.max_range must be > 0");
    if (!(max_bearing_deg > 0.0)) throw ConfigError("detection.max_bearing must be > 0");
    if (!(trans_sigma >= 0.0)) throw ConfigError("detection.trans_sigma must be >= 0");
    if (!(rot_sigma_deg >= 0.0)) throw ConfigError("detection.rot_sigma must be >= 0");
    if (!(rate > 0.0)) throw ConfigError("detection.rate must be > 0");
  }

  InformationWeights information() const {
    constexpr double kMinSigma = 1e-6;
    const double t = std::max(trans_sigma, kMinSigma);
    const double r = std::max(deg_to_rad(rot_sigma_deg), kMinSigma);
    return {1.0 / (t * t), 1.0 / (r * r)};
  }

  bool in_view(const Vec3& pole_in_robot) const {
    const double range = pole_in_robot.norm();
    if (range > max_range) return false;
    if (range == 0.0) return true;
    const double cos_bearing = std::clamp(pole_in_robot.x() / range, -1.0, 1.0);
    return rad_to_deg(std::acos(cos_bearing)) <= max_bearing_deg;
  }

  bool operator==(const DetectionModel&) const = default;
};

/// Exact per-frame errors applied by corrupt().
struct InjectionRecord {
  std::vector<double> trans_magnitudes;   // m, one per increment
  std::vector<double> rot_magnitudes_deg;
  std::vector<Pose3> error_transforms;    // increment_noisy = increment * error

  double mean_trans() const { return mean(trans_magnitudes); }
  double mean_rot_deg() const { return mean(rot_magnitudes_deg); }

 private:
  static double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  }
};

struct CorruptedTrack {
  OdometryTrack track;
  InjectionRecord injected;
};

/// SplitMix64 finalizer; derives independent stream seeds from one seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Pose of the profile at time t (clamped to the run).
inline Pose3 ground_truth_pose(const TrajectoryProfile& profile, double t) {
  const double t_straight = profile.straight_duration();
  const double t_turn = profile.turn_duration();
  const double yaw_end = deg_to_rad(profile.turn_angle_deg);
  if (t <= t_straight) return Pose3::translate(profile.speed * t, 0.0, 0.0);
  const Vec3 far_end(profile.straight_length, 0.0, 0.0);
  if (t <= t_straight + t_turn || !profile.return_leg) {
    const double yaw =
        deg_to_rad(profile.turn_rate_deg) * std::min(t - t_straight, t_turn);
    return Pose3(Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), far_end);
  }
  const double s =
      profile.speed * std::min(t - t_straight - t_turn, t_straight);
  const Vec3 heading(std::cos(yaw_end), std::sin(yaw_end), 0.0);
  return Pose3(Quat(Eigen::AngleAxisd(yaw_end, Vec3::UnitZ())),
               far_end + s * heading);
}

/// Samples the profile at t = k / rate, k = 0..floor(duration * rate).
inline Trajectory generate_ground_truth(const TrajectoryProfile& profile,
                                        double rate) {
  profile.validate();
  if (!(rate > 0.0)) throw ConfigError("sampling rate must be > 0");
  const auto last =
      static_cast<std::int64_t>(std::floor(profile.duration() * rate + 1e-9));
  Trajectory out;
  out.reserve(static_cast<std::size_t>(last + 1));
  for (std::int64_t k = 0; k <= last; ++k) {
    const double t = static_cast<double>(k) / rate;
    out.push_back({t, ground_truth_pose(profile, t)});
  }
  return out;
}

inline double estimate_rate(const Trajectory& traj) {
  if (traj.size() < 2) return 0.0;
  const double span = traj.back().timestamp - traj.front().timestamp;
  return span > 0.0 ? static_cast<double>(traj.size() - 1) / span : 0.0;
}

namespace detail {

inline Vec3 random_unit_vector(std::mt19937_64& rng, bool planar) {
  if (planar) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    const double a = angle(rng);
    return Vec3(std::cos(a), std::sin(a), 0.0);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    const Vec3 v(normal(rng), normal(rng), normal(rng));
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

inline Vec3 random_rotation_axis(std::mt19937_64& rng, bool planar) {
  if (planar) {
    std::bernoulli_distribution sign(0.5);
    return sign(rng) ? Vec3::UnitZ() : Vec3(-Vec3::UnitZ());
  }
  return random_unit_vector(rng, false);
}

}  // namespace detail

/// Perturbs every ground-truth increment by a fixed-magnitude error in a
/// random direction and integrates the noisy increments.
inline CorruptedTrack corrupt(const Trajectory& ground_truth,
                              const NoiseProfile& noise, std::uint64_t seed,
                              const std::string& source = "other") {
  noise.validate();
  if (ground_truth.size() < 2)
    throw DataError("ground truth needs at least two frames");
  const double rate = estimate_rate(ground_truth);
  if (std::abs(rate - noise.frame_rate) > 0.01 * noise.frame_rate)
    throw DataError("ground truth sampled at " + std::to_string(rate) +
                    " Hz, noise profile expects " +
                    std::to_string(noise.frame_rate) + " Hz");

  const bool planar = noise.mode == DofMode::planar;
  std::mt19937_64 rng(seed);
  CorruptedTrack out;
  out.track.source = source;
  out.track.rate = noise.frame_rate;
  out.track.mode = noise.mode;
  out.track.weights = noise.information();
  out.track.frames.reserve(ground_truth.size());
  out.track.frames.push_back(ground_truth.front());

  const std::size_t n = ground_truth.size() - 1;
  out.injected.trans_magnitudes.reserve(n);
  out.injected.rot_magnitudes_deg.reserve(n);
  out.injected.error_transforms.reserve(n);

  const double rot_rad = deg_to_rad(noise.rot_error_deg);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 direction = detail::random_unit_vector(rng, planar);
    const Vec3 axis = detail::random_rotation_axis(rng, planar);
    const Vec3 trans_err =
        noise.trans_error * noise.axis_scale.cwiseProduct(direction);
    const Pose3 error(detail::so3_exp(rot_rad * axis), trans_err);

    const Pose3 increment =
        relative(ground_truth[k].pose, ground_truth[k + 1].pose);
    const Pose3& prev = out.track.frames.back().pose;
    out.track.frames.push_back({ground_truth[k + 1].timestamp,
                                prev * (increment * error)});

    out.injected.trans_magnitudes.push_back(trans_err.norm());
    out.injected.rot_magnitudes_deg.push_back(noise.rot_error_deg);
    out.injected.error_transforms.push_back(error);
  }
  return out;
}

/// Robot pose at time t by geodesic interpolation of a sampled trajectory.
inline Pose3 pose_at(const Trajectory& traj, double t) {
  auto it = std::lower_bound(
      traj.begin(), traj.end(), t,
      [](const StampedPose& s, double time) { return s.timestamp < time; });
  if (it == traj.begin()) return traj.front().pose;
  if (it == traj.end()) return traj.back().pose;
  if (it->timestamp == t) return it->pose;
  const auto prev = std::prev(it);
  const double alpha =
      (t - prev->timestamp) / (it->timestamp - prev->timestamp);
  return interpolate(prev->pose, it->pose, alpha);
}

/// Detection ticks at k / model.rate inside the trajectory span.
inline std::vector<double> detection_ticks(const Trajectory& traj,
                                           double rate) {
  std::vector<double> ticks;
  if (traj.empty()) return ticks;
  const auto first = static_cast<std::int64_t>(
      std::ceil(traj.front().timestamp * rate - 1e-9));
  const auto last = static_cast<std::int64_t>(
      std::floor(traj.back().timestamp * rate + 1e-9));
  for (std::int64_t k = first; k <= last; ++k)
    ticks.push_back(static_cast<double>(k) / rate);
  return ticks;
}

inline std::vector<LandmarkObservation> simulate_landmark_observations(
    const Trajectory& ground_truth, const LandmarkLayout& layout,
    const Pose3& landmark_frame_pose, const DetectionModel& model,
    std::uint64_t seed) {
  layout.validate();
  model.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double rot_sigma = deg_to_rad(model.rot_sigma_deg);
  const InformationWeights weights = model.information();

  std::vector<Pose3> poles;
  for (const Pose3& local : layout.template_poses())
    poles.push_back(landmark_frame_pose * local);

  std::vector<LandmarkObservation> out;
  for (double t : detection_ticks(ground_truth, model.rate)) {
    const Pose3 robot = pose_at(ground_truth, t);
    for (int id = 0; id < layout.count; ++id) {
      const Pose3 rel = relative(robot, poles[static_cast<std::size_t>(id)]);
      if (!model.in_view(rel.translation())) continue;
      const Vec3 dt(normal(rng), normal(rng), normal(rng));
      const Vec3 dr(normal(rng), normal(rng), normal(rng));
      const Pose3 noise(detail::so3_exp(rot_sigma * dr), model.trans_sigma * dt);
      out.push_back({id, t, rel * noise, weights});
    }
  }
  return out;
}

}  // namespace pgval
