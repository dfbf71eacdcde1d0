#pragma once

// Flat `key = value` scenario configuration with `#` comments.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pgval/pipeline.hpp"

namespace pgval {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline double parse_double(const std::string& text, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

inline long long parse_int(const std::string& text, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

inline Vec3 parse_vec3(const std::string& text, const std::string& key) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw ConfigError(key + ": expected three comma-separated numbers");
  return Vec3(parse_double(parts[0], key), parse_double(parts[1], key),
              parse_double(parts[2], key));
}

}  // namespace detail

namespace detail {

inline void apply_source_key(SourceConfig& src, const std::string& field,
                             const std::string& key, const std::string& value) {
  NoiseProfile& n = src.noise;
  if (field == "rate") n.frame_rate = parse_double(value, key);
  else if (field == "trans_error") n.trans_error = parse_double(value, key);
  else if (field == "rot_error") n.rot_error_deg = parse_double(value, key);
  else if (field == "mode") {
    try {
      n.mode = parse_dof_mode(value);
    } catch (const ConfigError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  } else if (field == "axis_scale") n.axis_scale = parse_vec3(value, key);
  else throw ConfigError("unknown key '" + key + "'");
}

inline void apply_key(ScenarioConfig& c, const std::string& key, const std::string& value) {
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"seed", [&](const std::string& v) {
         const long long s = parse_int(v, key);
         if (s < 0) throw ConfigError("seed must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"trajectory.straight_length", [&](const std::string& v) { c.trajectory.straight_length = parse_double(v, key); }},
      {"trajectory.turn_angle", [&](const std::string& v) { c.trajectory.turn_angle_deg = parse_double(v, key); }},
      {"trajectory.speed", [&](const std::string& v) { c.trajectory.speed = parse_double(v, key); }},
      {"trajectory.turn_rate", [&](const std::string& v) { c.trajectory.turn_rate_deg = parse_double(v, key); }},
      {"trajectory.return_leg", [&](const std::string& v) { c.trajectory.return_leg = parse_bool(v, key); }},
      {"landmark.count", [&](const std::string& v) { c.landmarks.count = static_cast<int>(parse_int(v, key)); }},
      {"landmark.spacing", [&](const std::string& v) { c.landmarks.spacing = parse_double(v, key); }},
      {"landmark.lateral_offset", [&](const std::string& v) { c.landmarks.lateral_offset = parse_double(v, key); }},
      {"detection.max_range", [&](const std::string& v) { c.detection.max_range = parse_double(v, key); }},
      {"detection.max_bearing", [&](const std::string& v) { c.detection.max_bearing_deg = parse_double(v, key); }},
      {"detection.trans_sigma", [&](const std::string& v) { c.detection.trans_sigma = parse_double(v, key); }},
      {"detection.rot_sigma", [&](const std::string& v) { c.detection.rot_sigma_deg = parse_double(v, key); }},
      {"detection.rate", [&](const std::string& v) { c.detection.rate = parse_double(v, key); }},
      {"graph.position_only", [&](const std::string& v) { c.graph.position_only = parse_bool(v, key); }},
      {"solver.max_iterations", [&](const std::string& v) { c.solver.max_iterations = static_cast<int>(parse_int(v, key)); }},
      {"solver.cost_threshold", [&](const std::string& v) { c.solver.cost_threshold = parse_double(v, key); }},
      {"solver.update_threshold", [&](const std::string& v) { c.solver.update_threshold = parse_double(v, key); }},
      {"solver.initial_damping", [&](const std::string& v) { c.solver.initial_damping = parse_double(v, key); }},
      {"solver.damping_increase", [&](const std::string& v) { c.solver.damping_increase = parse_double(v, key); }},
      {"solver.damping_decrease", [&](const std::string& v) { c.solver.damping_decrease = parse_double(v, key); }},
      {"solver.jacobian", [&](const std::string& v) {
         if (v == "analytic") c.solver.jacobian = JacobianMode::analytic;
         else if (v == "numeric") c.solver.jacobian = JacobianMode::numeric;
         else throw ConfigError(key + ": expected analytic or numeric, got '" + v + "'");
       }},
      {"solver.huber_delta", [&](const std::string& v) { c.solver.huber_delta = parse_double(v, key); }},
  };
  if (auto it = setters.find(key); it != setters.end()) {
    it->second(value);
    return;
  }
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    const std::string name = key.substr(0, dot);
    for (auto& src : c.sources)
      if (src.name == name) {
        apply_source_key(src, key.substr(dot + 1), key, value);
        return;
      }
  }
  throw ConfigError("unknown key '" + key + "'");
}

}  // namespace detail

/// Parses and validates a configuration; missing keys keep their defaults.
/// `sources` (comma list) is applied first so per-source keys may precede it.
inline ScenarioConfig parse_config(std::string_view text) {
  struct Entry {
    std::string key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::map<std::string, int> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    Entry e{detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), line_no};
    if (e.key.empty() || e.value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
    if (auto [it, inserted] = seen.emplace(e.key, line_no); !inserted)
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + e.key +
                        "' (first set on line " + std::to_string(it->second) + ")");
    entries.push_back(std::move(e));
  }

  ScenarioConfig config;
  for (const auto& e : entries) {
    if (e.key != "sources") continue;
    config.sources.clear();
    for (const std::string& name : detail::split(e.value, ',')) {
      if (name.empty() || name.find_first_of(" \t./") != std::string::npos)
        throw ConfigError("line " + std::to_string(e.line) + ": invalid source name '" + name + "'");
      if (config.find_source(name))
        throw ConfigError("line " + std::to_string(e.line) + ": source '" + name + "' listed twice");
      config.sources.push_back({name, preset_for(name)});
    }
  }
  for (const auto& e : entries) {
    if (e.key == "sources") continue;
    try {
      detail::apply_key(config, e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError("line " + std::to_string(e.line) + ": " + err.what());
    }
  }
  config.validate();
  return config;
}

/// Effective configuration with every key, in a form parse_config() accepts.
inline std::string print_config(const ScenarioConfig& c) {
  using detail::format_double;
  auto vec = [](const Vec3& v) {
    return format_double(v.x()) + "," + format_double(v.y()) + "," + format_double(v.z());
  };
  std::ostringstream out;
  out << "seed = " << c.seed << "\n";
  out << "sources = ";
  for (std::size_t k = 0; k < c.sources.size(); ++k) out << (k ? "," : "") << c.sources[k].name;
  out << "\n";
  out << "trajectory.straight_length = " << format_double(c.trajectory.straight_length) << "\n"
      << "trajectory.turn_angle = " << format_double(c.trajectory.turn_angle_deg) << "\n"
      << "trajectory.speed = " << format_double(c.trajectory.speed) << "\n"
      << "trajectory.turn_rate = " << format_double(c.trajectory.turn_rate_deg) << "\n"
      << "trajectory.return_leg = " << (c.trajectory.return_leg ? "true" : "false") << "\n"
      << "landmark.count = " << c.landmarks.count << "\n"
      << "landmark.spacing = " << format_double(c.landmarks.spacing) << "\n"
      << "landmark.lateral_offset = " << format_double(c.landmarks.lateral_offset) << "\n"
      << "detection.max_range = " << format_double(c.detection.max_range) << "\n"
      << "detection.max_bearing = " << format_double(c.detection.max_bearing_deg) << "\n"
      << "detection.trans_sigma = " << format_double(c.detection.trans_sigma) << "\n"
      << "detection.rot_sigma = " << format_double(c.detection.rot_sigma_deg) << "\n"
      << "detection.rate = " << format_double(c.detection.rate) << "\n"
      << "graph.position_only = " << (c.graph.position_only ? "true" : "false") << "\n"
      << "solver.max_iterations = " << c.solver.max_iterations << "\n"
      << "solver.cost_threshold = " << format_double(c.solver.cost_threshold) << "\n"
      << "solver.update_threshold = " << format_double(c.solver.update_threshold) << "\n"
      << "solver.initial_damping = " << format_double(c.solver.initial_damping) << "\n"
      << "solver.damping_increase = " << format_double(c.solver.damping_increase) << "\n"
      << "solver.damping_decrease = " << format_double(c.solver.damping_decrease) << "\n"
      << "solver.jacobian = " << to_string(c.solver.jacobian) << "\n"
      << "solver.huber_delta = " << format_double(c.solver.huber_delta) << "\n";
  for (const auto& s : c.sources) {
    out << s.name << ".rate = " << format_double(s.noise.frame_rate) << "\n"
        << s.name << ".trans_error = " << format_double(s.noise.trans_error) << "\n"
        << s.name << ".rot_error = " << format_double(s.noise.rot_error_deg) << "\n"
        << s.name << ".mode = " << to_string(s.noise.mode) << "\n"
        << s.name << ".axis_scale = " << vec(s.noise.axis_scale) << "\n";
  }
  return out.str();
}

}  // namespace pgval
