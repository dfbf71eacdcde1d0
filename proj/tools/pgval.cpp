// pgval: simulate tunnel runs, optimize odometry pose graphs, report drift.
//
// Exit status: 0 success, 1 usage error, 2 data error, 3 numerical error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pgval/config.hpp"
#include "pgval/io.hpp"
#include "pgval/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pgval;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Files created by a subcommand; removed again unless commit() is called.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_, ec);
      if (ec) throw DataError("cannot create directory '" + dir_.string() + "'");
      created_dir_ = true;
    }
  }
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : files_) fs::remove(p, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  std::string add(const std::string& name) {
    const fs::path p = dir_ / name;
    files_.push_back(p);
    return p.string();
  }
  template <class Writer>
  void write(const std::string& name, Writer&& writer) {
    const std::string path = add(name);
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    writer(out);
    if (!out) throw DataError("failed writing '" + path + "'");
  }
  void commit() { committed_ = true; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool created_dir_ = false;
  bool committed_ = false;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig load_config(const std::string& path) {
  return path.empty() ? ScenarioConfig{} : parse_config(read_text(path));
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string out;
  long long seed = -1;
};

void run_simulate(const SimulateArgs& args) {
  ScenarioConfig config = load_config(args.config);
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  const Scenario scenario = simulate_scenario(config);

  OutputSet out(args.out);
  out.write("config.txt", [&](std::ostream& s) { s << print_config(config); });
  out.write("ground_truth.txt", [&](std::ostream& s) {
    OdometryTrack gt;
    gt.source = "ground_truth";
    gt.rate = estimate_rate(scenario.reference);
    gt.frames = scenario.reference;
    write_track(s, gt);
  });
  out.write("observations.txt",
            [&](std::ostream& s) { write_observations(s, scenario.observations); });
  for (const auto& src : scenario.sources) {
    out.write(src.name + "_raw.txt", [&](std::ostream& s) { write_track(s, src.corrupted.track); });
    out.write(src.name + "_injected.txt",
              [&](std::ostream& s) { write_injection(s, src.corrupted.injected); });
  }
  out.commit();
  std::printf("simulated %zu source(s), %zu observations -> %s\n", scenario.sources.size(),
              scenario.observations.size(), args.out.c_str());
}

// ---------------------------------------------------------------------------

struct OptimizeArgs {
  std::string track;
  std::string observations;
  std::string out;
  std::string mode;
  std::string config;
  int max_iterations = -1;
  std::string jacobian;
  bool position_only = false;
  double huber = -1.0;
};

void run_optimize(const OptimizeArgs& args) {
  ScenarioConfig config = load_config(args.config);
  if (args.max_iterations >= 0) config.solver.max_iterations = args.max_iterations;
  if (!args.jacobian.empty()) {
    if (args.jacobian == "analytic") config.solver.jacobian = JacobianMode::analytic;
    else if (args.jacobian == "numeric") config.solver.jacobian = JacobianMode::numeric;
    else throw UsageError("--jacobian must be analytic or numeric");
  }
  if (args.position_only) config.graph.position_only = true;
  if (args.huber >= 0.0) config.solver.huber_delta = args.huber;
  config.validate();

  const OdometryTrack track = read_track(args.track);
  const std::vector<LandmarkObservation> obs = read_observations(args.observations);
  DofMode mode = track.mode;
  if (!args.mode.empty()) {
    try {
      mode = parse_dof_mode(args.mode);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }

  const AnyEvaluation ev = evaluate(track, observations_within(track, obs), config.landmarks,
                                    config.solver, mode, config.graph);

  OutputSet out(args.out);
  const std::string name = track.source;
  std::visit(
      [&](const auto& e) {
        OdometryTrack optimized = e.optimized_track();
        optimized.weights = track.weights;
        out.write(name + "_optimized.txt", [&](std::ostream& s) { write_track(s, optimized); });
        out.write(name + "_graph.txt", [&](std::ostream& s) { write_graph(s, e.graph, &e.result.state); });
        out.write(name + "_stats.txt", [&](std::ostream& s) { write_solve_stats(s, e.result.stats); });
      },
      ev);
  out.write(name + "_config.txt", [&](std::ostream& s) {
    s << "# optimize " << args.track << " " << args.observations << " mode "
      << to_string(mode) << "\n"
      << print_config(config);
  });

  // The report step reads raw track and observations next to the results.
  std::error_code ec;
  const fs::path raw_dest = out.dir() / (name + "_raw.txt");
  if (!fs::exists(raw_dest) || !fs::equivalent(args.track, raw_dest, ec))
    out.write(name + "_raw.txt", [&](std::ostream& s) { write_track(s, track); });
  const fs::path obs_dest = out.dir() / "observations.txt";
  if (!fs::exists(obs_dest))
    out.write("observations.txt", [&](std::ostream& s) { write_observations(s, obs); });
  out.commit();

  const ErrorReport& r = report_of(ev);
  std::printf("%s: %zu frames, %.6g m/frame, %.6g deg/frame, %d iterations (%s)\n",
              name.c_str(), r.frames, r.trans_per_frame, r.rot_deg_per_frame,
              r.solver ? r.solver->iterations : 0,
              r.solver ? std::string(to_string(r.solver->reason)).c_str() : "-");
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string dir;
  std::string ground_truth;
};

void run_report(const ReportArgs& args) {
  const fs::path dir(args.dir);
  if (!fs::is_directory(dir)) throw DataError("'" + args.dir + "' is not a directory");
  std::vector<std::string> sources;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    const std::string suffix = "_optimized.txt";
    if (file.size() > suffix.size() &&
        file.compare(file.size() - suffix.size(), suffix.size(), suffix) == 0)
      sources.push_back(file.substr(0, file.size() - suffix.size()));
  }
  std::sort(sources.begin(), sources.end());
  if (sources.empty()) throw DataError("no *_optimized.txt files in '" + args.dir + "'");

  std::vector<LandmarkObservation> obs;
  if (fs::exists(dir / "observations.txt")) obs = read_observations((dir / "observations.txt").string());
  std::optional<OdometryTrack> ground_truth;
  if (!args.ground_truth.empty()) ground_truth = read_track(args.ground_truth);

  OutputSet out(dir);
  std::vector<ErrorReport> reports;
  std::vector<std::pair<std::string, double>> ate;
  for (const auto& name : sources) {
    const OdometryTrack raw = read_track((dir / (name + "_raw.txt")).string());
    const OdometryTrack opt = read_track((dir / (name + "_optimized.txt")).string());
    ErrorReport r = per_frame_corrections(raw, opt, opt.mode);
    if (fs::exists(dir / (name + "_stats.txt"))) {
      std::ifstream in(dir / (name + "_stats.txt"));
      r.solver = read_solve_stats(in);
    }
    reports.push_back(r);

    out.write(name + "_xy.csv", [&](std::ostream& s) {
      s << "timestamp,raw_x,raw_y,opt_x,opt_y\n";
      for (std::size_t k = 0; k < raw.frames.size(); ++k) {
        const Vec3& a = raw.frames[k].pose.translation();
        const Vec3& b = opt.frames[k].pose.translation();
        s << detail::format_double(raw.frames[k].timestamp) << ',' << detail::format_double(a.x())
          << ',' << detail::format_double(a.y()) << ',' << detail::format_double(b.x()) << ','
          << detail::format_double(b.y()) << '\n';
      }
    });
    if (!obs.empty()) {
      out.write(name + "_landmarks.csv", [&](std::ostream& s) {
        s << "timestamp,pole_id,raw_x,raw_y,opt_x,opt_y\n";
        for (const auto& o : observations_within(raw, obs)) {
          const Vec3 a = (pose_at(raw.frames, o.timestamp) * o.relative_pose).translation();
          const Vec3 b = (pose_at(opt.frames, o.timestamp) * o.relative_pose).translation();
          s << detail::format_double(o.timestamp) << ',' << o.pole_id << ','
            << detail::format_double(a.x()) << ',' << detail::format_double(a.y()) << ','
            << detail::format_double(b.x()) << ',' << detail::format_double(b.y()) << '\n';
        }
      });
    }
    if (ground_truth) {
      Trajectory gt_at;
      Trajectory est_at;
      std::size_t g = 0;
      for (const auto& f : opt.frames) {
        while (g < ground_truth->frames.size() &&
               ground_truth->frames[g].timestamp < f.timestamp - 1e-9)
          ++g;
        if (g < ground_truth->frames.size() &&
            std::abs(ground_truth->frames[g].timestamp - f.timestamp) <= 1e-9) {
          gt_at.push_back({f.timestamp, ground_truth->frames[g].pose});
          est_at.push_back(f);
        }
      }
      if (gt_at.size() >= 3) ate.emplace_back(name, ate_rmse(est_at, gt_at));
    }
  }
  out.write("report.csv", [&](std::ostream& s) { write_report_csv(s, reports); });
  out.write("report.txt", [&](std::ostream& s) {
    write_report_text(s, reports);
    if (!ate.empty()) {
      s << "\nATE RMSE vs ground truth (rigidly aligned)\n";
      for (const auto& [name, v] : ate) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g m", v);
        s << "  " << name << ": " << buf << "\n";
      }
    }
  });
  out.commit();
  std::ifstream txt(dir / "report.txt");
  std::cout << txt.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose-graph odometry validation for tunnel runs"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate ground truth, odometry tracks and pole detections");
  simulate->add_option("-c,--config", sim.config, "Scenario configuration (key = value)");
  simulate->add_option("-o,--out", sim.out, "Output directory")->required();
  simulate->add_option("-s,--seed", sim.seed, "Override the configured seed");

  OptimizeArgs opt;
  auto* optimize_cmd = app.add_subcommand("optimize", "Optimize one odometry track against pole observations");
  optimize_cmd->add_option("-t,--track", opt.track, "Odometry track file")->required();
  optimize_cmd->add_option("-b,--observations", opt.observations, "Observation file")->required();
  optimize_cmd->add_option("-o,--out", opt.out, "Output directory")->required();
  optimize_cmd->add_option("-m,--mode", opt.mode, "planar or full3d (default: track header)");
  optimize_cmd->add_option("-c,--config", opt.config, "Configuration for landmark layout and solver");
  optimize_cmd->add_option("--max-iterations", opt.max_iterations, "Solver iteration limit");
  optimize_cmd->add_option("--jacobian", opt.jacobian, "analytic or numeric");
  optimize_cmd->add_flag("--position-only", opt.position_only, "Observation residual on pole position only");
  optimize_cmd->add_option("--huber", opt.huber, "Huber threshold on observation edges (0 = off)");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Write error table, CSV and plot data for an output directory");
  report->add_option("-d,--dir", rep.dir, "Directory with optimization outputs")->required();
  report->add_option("-g,--ground-truth", rep.ground_truth, "Ground-truth track for ATE");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*simulate) run_simulate(sim);
    else if (*optimize_cmd) run_optimize(opt);
    else if (*report) run_report(rep);
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConditioningError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
}
