#pragma once

// Plain-text trajectory, observation, graph, stats and report files.
//
// Pose columns are always `tx ty tz qx qy qz qw`; numbers are written with
// 17 significant digits so that a write/read cycle reproduces every double.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pgval/config.hpp"
#include "pgval/graph.hpp"
#include "pgval/metrics.hpp"
#include "pgval/optimizer.hpp"

namespace pgval {

namespace detail {

inline void write_pose(std::ostream& out, const Pose3& p) {
  const Vec3& t = p.translation();
  const Quat& q = p.rotation();
  out << format_double(t.x()) << ' ' << format_double(t.y()) << ' ' << format_double(t.z()) << ' '
      << format_double(q.x()) << ' ' << format_double(q.y()) << ' ' << format_double(q.z()) << ' '
      << format_double(q.w());
}

inline std::string line_error(int line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

inline std::vector<double> parse_numbers(const std::string& line, std::size_t expected,
                                         int line_no, const std::string& what) {
  std::istringstream in(line);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(v))
      throw DataError(line_error(line_no, "malformed number '" + token + "'"));
    values.push_back(v);
  }
  if (values.size() != expected)
    throw DataError(line_error(line_no, "expected " + std::to_string(expected) +
                                            " columns (" + what + "), got " +
                                            std::to_string(values.size())));
  return values;
}

inline Pose3 pose_from(const std::vector<double>& v, std::size_t offset, int line_no) {
  const Quat q(v[offset + 6], v[offset + 3], v[offset + 4], v[offset + 5]);
  if (q.norm() < 1e-6) throw DataError(line_error(line_no, "zero quaternion"));
  return Pose3(q, Vec3(v[offset], v[offset + 1], v[offset + 2]));
}

// `# key: value` header line; returns false for other comments.
inline bool header_field(const std::string& line, std::string& key, std::string& value) {
  if (line.empty() || line[0] != '#') return false;
  const auto colon = line.find(':');
  if (colon == std::string::npos) return false;
  key = trim(line.substr(1, colon - 1));
  value = trim(line.substr(colon + 1));
  return !key.empty();
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

inline void integer_value(double v, int line_no, const std::string& what) {
  if (v < 0.0 || v != std::floor(v) || v > 2147483647.0)
    throw DataError(line_error(line_no, what + " must be a nonnegative integer"));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Odometry tracks: `timestamp tx ty tz qx qy qz qw`.

inline void write_track(std::ostream& out, const OdometryTrack& track) {
  out << "# source: " << track.source << "\n"
      << "# rate: " << detail::format_double(track.rate) << "\n"
      << "# mode: " << to_string(track.mode) << "\n"
      << "# trans_weight: " << detail::format_double(track.weights.translational) << "\n"
      << "# rot_weight: " << detail::format_double(track.weights.rotational) << "\n"
      << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& f : track.frames) {
    out << detail::format_double(f.timestamp) << ' ';
    detail::write_pose(out, track.mode == DofMode::planar ? lift_planar(project_planar(f.pose))
                                                         : f.pose);
    out << '\n';
  }
}

inline OdometryTrack read_track(std::istream& in) {
  OdometryTrack track;
  track.weights = {1.0, 1.0};
  std::string line, key, value;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!detail::header_field(line, key, value)) continue;
      try {
        if (key == "source") track.source = value;
        else if (key == "rate") track.rate = detail::parse_double(value, key);
        else if (key == "mode") track.mode = parse_dof_mode(value);
        else if (key == "trans_weight") track.weights.translational = detail::parse_double(value, key);
        else if (key == "rot_weight") track.weights.rotational = detail::parse_double(value, key);
      } catch (const ConfigError& e) {
        throw DataError(detail::line_error(line_no, e.what()));
      }
      continue;
    }
    const auto v = detail::parse_numbers(line, 8, line_no, "timestamp tx ty tz qx qy qz qw");
    if (!track.frames.empty() && !(v[0] > track.frames.back().timestamp))
      throw DataError(detail::line_error(
          line_no, "non-increasing timestamps " + detail::format_double(track.frames.back().timestamp) +
                       " and " + detail::format_double(v[0])));
    track.frames.push_back({v[0], detail::pose_from(v, 1, line_no)});
  }
  if (!(track.rate > 0.0)) throw DataError("track rate must be > 0");
  return track;
}

inline void write_track(const std::string& path, const OdometryTrack& track) {
  auto out = detail::open_out(path);
  write_track(out, track);
}

inline OdometryTrack read_track(const std::string& path) {
  auto in = detail::open_in(path);
  try {
    return read_track(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Landmark observations: `timestamp pole_id tx ty tz qx qy qz qw`. The
// information weights are per file.

inline void write_observations(std::ostream& out, const std::vector<LandmarkObservation>& obs) {
  const InformationWeights w = obs.empty() ? InformationWeights{} : obs.front().weights;
  for (const auto& o : obs)
    if (!(o.weights == w))
      throw DataError("observation file requires uniform information weights");
  out << "# trans_weight: " << detail::format_double(w.translational) << "\n"
      << "# rot_weight: " << detail::format_double(w.rotational) << "\n"
      << "# timestamp pole_id tx ty tz qx qy qz qw\n";
  for (const auto& o : obs) {
    out << detail::format_double(o.timestamp) << ' ' << o.pole_id << ' ';
    detail::write_pose(out, o.relative_pose);
    out << '\n';
  }
}

inline std::vector<LandmarkObservation> read_observations(std::istream& in) {
  std::vector<LandmarkObservation> obs;
  InformationWeights w{1.0, 1.0};
  std::string line, key, value;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!detail::header_field(line, key, value)) continue;
      try {
        if (key == "trans_weight") w.translational = detail::parse_double(value, key);
        else if (key == "rot_weight") w.rotational = detail::parse_double(value, key);
      } catch (const ConfigError& e) {
        throw DataError(detail::line_error(line_no, e.what()));
      }
      continue;
    }
    const auto v = detail::parse_numbers(line, 9, line_no, "timestamp pole_id tx ty tz qx qy qz qw");
    detail::integer_value(v[1], line_no, "pole_id");
    if (!obs.empty() && v[0] < obs.back().timestamp)
      throw DataError(detail::line_error(
          line_no, "decreasing timestamps " + detail::format_double(obs.back().timestamp) +
                       " and " + detail::format_double(v[0])));
    obs.push_back({static_cast<int>(v[1]), v[0], detail::pose_from(v, 2, line_no), w});
  }
  if (w.translational < 0.0 || w.rotational < 0.0)
    throw DataError("observation weights must be >= 0");
  for (auto& o : obs) o.weights = w;
  return obs;
}

inline void write_observations(const std::string& path, const std::vector<LandmarkObservation>& obs) {
  auto out = detail::open_out(path);
  write_observations(out, obs);
}

inline std::vector<LandmarkObservation> read_observations(const std::string& path) {
  auto in = detail::open_in(path);
  try {
    return read_observations(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Injected-noise record: `index trans_m rot_deg tx ty tz qx qy qz qw`.

inline void write_injection(std::ostream& out, const InjectionRecord& rec) {
  out << "# increment trans_m rot_deg tx ty tz qx qy qz qw\n";
  for (std::size_t k = 0; k < rec.error_transforms.size(); ++k) {
    out << k << ' ' << detail::format_double(rec.trans_magnitudes[k]) << ' '
        << detail::format_double(rec.rot_magnitudes_deg[k]) << ' ';
    detail::write_pose(out, rec.error_transforms[k]);
    out << '\n';
  }
}

inline InjectionRecord read_injection(std::istream& in) {
  InjectionRecord rec;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto v = detail::parse_numbers(line, 10, line_no, "increment trans_m rot_deg pose");
    if (v[0] != static_cast<double>(rec.error_transforms.size()))
      throw DataError(detail::line_error(line_no, "increment index out of sequence"));
    rec.trans_magnitudes.push_back(v[1]);
    rec.rot_magnitudes_deg.push_back(v[2]);
    rec.error_transforms.push_back(detail::pose_from(v, 3, line_no));
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Graph edge list.
//
//   MODE planar|full3d
//   GAUGE i
//   NODE i timestamp frame|observation <pose>
//   LANDMARK_FRAME <pose>
//   TEMPLATE pole <pose>
//   EDGE_ODOM i j <pose> w_trans w_rot
//   EDGE_OBS i pole <pose> w_trans w_rot
//
// Planar graphs store lifted poses (z = 0, yaw-only quaternion).

template <class G>
void write_graph(std::ostream& out, const PoseGraph<G>& g, const GraphState<G>* state = nullptr) {
  using detail::format_double;
  out << "# pose graph: " << g.source << " @ " << format_double(g.rate) << " Hz\n"
      << "MODE " << to_string(dof_mode_of<G>) << "\n"
      << "SOURCE " << g.source << " " << format_double(g.rate) << "\n"
      << "POSITION_ONLY " << (g.position_only ? 1 : 0) << "\n"
      << "GAUGE " << g.gauge << "\n";
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    const auto& n = g.nodes[k];
    out << "NODE " << k << ' ' << format_double(n.timestamp) << ' '
        << (n.origin == NodeOrigin::frame ? "frame" : "observation") << ' ';
    detail::write_pose(out, to_pose3(state ? state->poses[k] : n.pose));
    out << '\n';
  }
  if (!g.unconstrained) {
    out << "LANDMARK_FRAME ";
    detail::write_pose(out, to_pose3(state ? state->landmark_frame : g.landmark_frame));
    out << '\n';
  }
  for (std::size_t k = 0; k < g.template_poses.size(); ++k) {
    out << "TEMPLATE " << k << ' ';
    detail::write_pose(out, to_pose3(g.template_poses[k]));
    out << '\n';
  }
  for (const auto& e : g.odometry) {
    out << "EDGE_ODOM " << e.from << ' ' << e.to << ' ';
    detail::write_pose(out, to_pose3(e.measured));
    out << ' ' << format_double(e.weights.translational) << ' '
        << format_double(e.weights.rotational) << '\n';
  }
  for (const auto& e : g.observations) {
    out << "EDGE_OBS " << e.node << ' ' << e.pole << ' ';
    detail::write_pose(out, to_pose3(e.measured));
    out << ' ' << format_double(e.weights.translational) << ' '
        << format_double(e.weights.rotational) << '\n';
  }
}

/// Reads a graph written by write_graph(); the MODE line must match G.
template <class G>
PoseGraph<G> read_graph(std::istream& in) {
  PoseGraph<G> g;
  g.unconstrained = true;
  std::string line;
  int line_no = 0;
  bool mode_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    std::string rest;
    std::getline(ls, rest);
    rest = detail::trim(rest);
    if (tag == "MODE") {
      DofMode mode;
      try {
        mode = parse_dof_mode(rest);
      } catch (const ConfigError& e) {
        throw DataError(detail::line_error(line_no, e.what()));
      }
      if (mode != dof_mode_of<G>)
        throw DataError(detail::line_error(line_no, "graph mode is " + rest));
      mode_seen = true;
    } else if (tag == "SOURCE") {
      std::istringstream rs(rest);
      std::string rate;
      rs >> g.source >> rate;
      g.rate = detail::parse_numbers(rate, 1, line_no, "rate")[0];
    } else if (tag == "POSITION_ONLY") {
      g.position_only = detail::parse_numbers(rest, 1, line_no, "flag")[0] != 0.0;
    } else if (tag == "GAUGE") {
      const double v = detail::parse_numbers(rest, 1, line_no, "node index")[0];
      detail::integer_value(v, line_no, "gauge");
      g.gauge = static_cast<std::size_t>(v);
    } else if (tag == "NODE") {
      std::istringstream rs(rest);
      std::string index, stamp, origin, pose_rest;
      rs >> index >> stamp >> origin;
      std::getline(rs, pose_rest);
      const auto v = detail::parse_numbers(index + " " + stamp + " " + pose_rest, 9, line_no,
                                           "index timestamp origin pose");
      if (v[0] != static_cast<double>(g.nodes.size()))
        throw DataError(detail::line_error(line_no, "node index out of sequence"));
      if (origin != "frame" && origin != "observation")
        throw DataError(detail::line_error(line_no, "unknown node origin '" + origin + "'"));
      g.nodes.push_back({v[1], from_pose3<G>(detail::pose_from(v, 2, line_no)),
                         origin == "frame" ? NodeOrigin::frame : NodeOrigin::observation});
    } else if (tag == "LANDMARK_FRAME") {
      const auto v = detail::parse_numbers(rest, 7, line_no, "pose");
      g.landmark_frame = from_pose3<G>(detail::pose_from(v, 0, line_no));
    } else if (tag == "TEMPLATE") {
      const auto v = detail::parse_numbers(rest, 8, line_no, "pole pose");
      if (v[0] != static_cast<double>(g.template_poses.size()))
        throw DataError(detail::line_error(line_no, "template index out of sequence"));
      g.template_poses.push_back(from_pose3<G>(detail::pose_from(v, 1, line_no)));
    } else if (tag == "EDGE_ODOM") {
      const auto v = detail::parse_numbers(rest, 11, line_no, "i j pose w_trans w_rot");
      detail::integer_value(v[0], line_no, "node index");
      detail::integer_value(v[1], line_no, "node index");
      g.odometry.push_back({static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]),
                            from_pose3<G>(detail::pose_from(v, 2, line_no)), {v[9], v[10]}});
    } else if (tag == "EDGE_OBS") {
      const auto v = detail::parse_numbers(rest, 11, line_no, "i pole pose w_trans w_rot");
      detail::integer_value(v[0], line_no, "node index");
      detail::integer_value(v[1], line_no, "pole id");
      g.observations.push_back({static_cast<std::size_t>(v[0]), static_cast<int>(v[1]),
                                from_pose3<G>(detail::pose_from(v, 2, line_no)), {v[9], v[10]}});
      g.unconstrained = false;
    } else {
      throw DataError(detail::line_error(line_no, "unknown record '" + tag + "'"));
    }
  }
  if (!mode_seen) throw DataError("graph file has no MODE line");
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Solver statistics: `key = value`.

inline void write_solve_stats(std::ostream& out, const SolveStats& s) {
  out << "iterations = " << s.iterations << "\n"
      << "initial_cost = " << detail::format_double(s.initial_cost) << "\n"
      << "final_cost = " << detail::format_double(s.final_cost) << "\n"
      << "reason = " << to_string(s.reason) << "\n"
      << "cost_trace = ";
  for (std::size_t k = 0; k < s.cost_trace.size(); ++k)
    out << (k ? "," : "") << detail::format_double(s.cost_trace[k]);
  out << "\n";
}

inline SolveStats read_solve_stats(std::istream& in) {
  SolveStats s;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(detail::line_error(line_no, "expected key = value"));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    try {
      if (key == "iterations") s.iterations = static_cast<int>(detail::parse_int(value, key));
      else if (key == "initial_cost") s.initial_cost = detail::parse_double(value, key);
      else if (key == "final_cost") s.final_cost = detail::parse_double(value, key);
      else if (key == "reason") {
        if (value == "cost-threshold") s.reason = ConvergenceReason::cost_threshold;
        else if (value == "update-threshold") s.reason = ConvergenceReason::update_threshold;
        else if (value == "max-iterations") s.reason = ConvergenceReason::max_iterations;
        else throw ConfigError("unknown reason '" + value + "'");
      } else if (key == "cost_trace") {
        s.cost_trace.clear();
        if (!value.empty())
          for (const auto& part : detail::split(value, ',')) s.cost_trace.push_back(detail::parse_double(part, key));
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw DataError(detail::line_error(line_no, e.what()));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Reports.

inline constexpr const char* kReportCsvHeader =
    "source,rate_hz,frames,trans_m_per_frame,rot_deg_per_frame,trans_m_per_s,rot_deg_per_s,"
    "closure_raw_m,closure_opt_m";

inline void write_report_csv(std::ostream& out, const std::vector<ErrorReport>& reports) {
  using detail::format_double;
  out << kReportCsvHeader << "\n";
  for (const auto& r : reports)
    out << r.source << ',' << format_double(r.rate) << ',' << r.frames << ','
        << format_double(r.trans_per_frame) << ',' << format_double(r.rot_deg_per_frame) << ','
        << format_double(r.trans_per_second) << ',' << format_double(r.rot_deg_per_second) << ','
        << format_double(r.closure_raw) << ',' << format_double(r.closure_optimized) << '\n';
}

inline std::vector<ErrorReport> read_report_csv(std::istream& in) {
  std::vector<ErrorReport> reports;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kReportCsvHeader) throw DataError("report.csv: unexpected header");
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != 9) throw DataError(detail::line_error(line_no, "expected 9 CSV fields"));
    try {
      ErrorReport r;
      r.source = f[0];
      r.rate = detail::parse_double(f[1], "rate_hz");
      r.frames = static_cast<std::size_t>(detail::parse_int(f[2], "frames"));
      r.trans_per_frame = detail::parse_double(f[3], "trans_m_per_frame");
      r.rot_deg_per_frame = detail::parse_double(f[4], "rot_deg_per_frame");
      r.trans_per_second = detail::parse_double(f[5], "trans_m_per_s");
      r.rot_deg_per_second = detail::parse_double(f[6], "rot_deg_per_s");
      r.closure_raw = detail::parse_double(f[7], "closure_raw_m");
      r.closure_optimized = detail::parse_double(f[8], "closure_opt_m");
      reports.push_back(std::move(r));
    } catch (const ConfigError& e) {
      throw DataError(detail::line_error(line_no, e.what()));
    }
  }
  return reports;
}

/// Table in the layout "source | frame rate | trans. error | rot. error",
/// one per-frame row and one per-second row per source.
inline void write_report_text(std::ostream& out, const std::vector<ErrorReport>& reports) {
  auto cell = [](double v, const char* unit) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.5g %s", v, unit);
    return std::string(buf);
  };
  const std::string rule(72, '-');
  out << "Average odometry errors per frame and per second\n" << rule << "\n";
  out << std::left << std::setw(16) << "Source" << std::setw(12) << "Frame rate"
      << std::setw(22) << "Trans. error" << "Rot. error\n"
      << rule << "\n";
  for (const auto& r : reports) {
    char rate[32];
    std::snprintf(rate, sizeof(rate), "%g Hz", r.rate);
    out << std::setw(16) << r.source << std::setw(12) << rate << std::setw(22)
        << cell(r.trans_per_frame, "m/frame") << cell(r.rot_deg_per_frame, "deg/frame") << "\n";
    out << std::setw(16) << "" << std::setw(12) << "" << std::setw(22)
        << cell(r.trans_per_second, "m/s") << cell(r.rot_deg_per_second, "deg/s") << "\n"
        << rule << "\n";
  }
  out << "\nClosure error (start to end, planar)\n";
  for (const auto& r : reports) {
    out << "  " << std::setw(14) << r.source << "raw " << cell(r.closure_raw, "m")
        << "   optimized " << cell(r.closure_optimized, "m");
    if (r.closure_raw_vertical > 0.0 || r.closure_optimized_vertical > 0.0)
      out << "   (vertical raw " << cell(r.closure_raw_vertical, "m") << ", optimized "
          << cell(r.closure_optimized_vertical, "m") << ")";
    if (r.unconstrained) out << "   [unconstrained]";
    out << "\n";
  }
  out << "\nPhase breakdown (per frame)\n";
  for (const auto& r : reports) {
    out << "  " << std::setw(14) << r.source << "straight(" << r.straight.increments << ") "
        << cell(r.straight.mean_trans, "m") << " " << cell(r.straight.mean_rot_deg, "deg")
        << "   turn(" << r.turn.increments << ") " << cell(r.turn.mean_trans, "m") << " "
        << cell(r.turn.mean_rot_deg, "deg") << "\n";
  }
  bool any_solver = false;
  for (const auto& r : reports) any_solver |= r.solver.has_value();
  if (any_solver) {
    out << "\nSolver\n";
    for (const auto& r : reports) {
      if (!r.solver) continue;
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d iterations, cost %.6g -> %.6g, %s", r.solver->iterations,
                    r.solver->initial_cost, r.solver->final_cost,
                    std::string(to_string(r.solver->reason)).c_str());
      out << "  " << std::setw(14) << r.source << buf << "\n";
    }
  }
}

}  // namespace pgval
