#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pgval/geometry.hpp"

namespace pgval {

/// Malformed or inconsistent input data (files, tracks, observations).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or syntax.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The normal equations could not be solved even with heavy damping.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

enum class DofMode { planar, full3d };

inline std::string_view to_string(DofMode mode) {
  return mode == DofMode::planar ? "planar" : "full3d";
}

inline DofMode parse_dof_mode(std::string_view text) {
  if (text == "planar" || text == "2d") return DofMode::planar;
  if (text == "full3d" || text == "3d") return DofMode::full3d;
  throw ConfigError("unknown dof mode '" + std::string(text) +
                    "' (expected planar or full3d)");
}

/// Diagonal information: one scalar for the translational block (1/m^2) and
/// one for the rotational block (1/rad^2).
struct InformationWeights {
  double translational = 1.0;
  double rotational = 1.0;

  InformationWeights scaled(double factor) const {
    return {translational * factor, rotational * factor};
  }
  bool operator==(const InformationWeights&) const = default;
};

struct StampedPose {
  double timestamp = 0.0;
  Pose3 pose;
};

using Trajectory = std::vector<StampedPose>;

/// Relative pose robot -> pole, detected at `timestamp`.
struct LandmarkObservation {
  int pole_id = 0;
  double timestamp = 0.0;
  Pose3 relative_pose;
  InformationWeights weights;
};

/// Timestamped odometry output of one sensor source.
struct OdometryTrack {
  std::string source = "other";
  double rate = 1.0;
  DofMode mode = DofMode::full3d;
  InformationWeights weights;  // per-frame increment information
  Trajectory frames;
};

}  // namespace pgval
