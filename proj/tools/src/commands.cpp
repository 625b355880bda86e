#include "imuscale_cli/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "imuscale/oracle.hpp"

namespace imuscale::cli {
namespace {

namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(Stage::Config, "cannot write '" + path + "'");
}

void emit_report(const Report& report, std::ostream& out) {
  const std::string text = serialize(report);
  if (report.config.report.empty()) {
    out << text;
  } else {
    write_text(report.config.report, text);
  }
}

struct Inputs {
  std::vector<PoseSample> poses;
  std::vector<ImuSample> imu;
  std::vector<InputDigest> digests;
};

Inputs load_inputs(const RunConfig& c) {
  if (c.trajectory.empty()) throw Error(Stage::Ingest, "no trajectory file given", "pass --trajectory");
  if (c.imu.empty()) throw Error(Stage::Ingest, "no IMU file given", "pass --imu");
  Inputs in;
  in.poses = parse_trajectory(c.trajectory);
  in.imu = parse_imu(c.imu);
  in.digests.push_back({"trajectory", c.trajectory, sha256_file(c.trajectory), in.poses.size()});
  in.digests.push_back({"imu", c.imu, sha256_file(c.imu), in.imu.size()});
  return in;
}

Report base_report(const std::string& command, const RunConfig& c) {
  Report r;
  r.command = command;
  r.config = c;
  return r;
}

void fill_estimate(Report& r, const PipelineResult& res, const RunConfig& c) {
  r.solution = res.solution;
  r.time_domain = res.time_domain;
  r.alignment = res.alignment;
  r.smoother = SmootherSummary{!c.no_smoothing, res.process_noise, res.measurement_variance};
  r.rate = res.rate;
  r.clock_origin = res.clock_origin;
  r.samples_used = res.samples_used;
  if (c.record_timings) r.timings = res.timings;
  r.warnings = res.warnings;
}

bool is_number(const std::string& s) {
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return !s.empty() && end != s.c_str();
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

int exit_code(Stage stage) {
  switch (stage) {
    case Stage::Config: return 1;
    case Stage::Ingest: return 2;
    case Stage::Alignment: return 3;
    case Stage::Smoothing: return 4;
    case Stage::Scale: return 5;
    case Stage::Evaluation: return 6;
  }
  return 1;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Stage::Ingest, "cannot open '" + path.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

GroundPoints parse_ground_points(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Stage::Ingest, "cannot open '" + path.string() + "'", "check the ground point path");
  GroundPoints gp;
  std::string line;
  int lineno = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(trim(f));
    if (first_row && !fields.empty() && !is_number(fields[0])) {
      first_row = false;
      continue;
    }
    first_row = false;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 6) throw Error(Stage::Ingest, where + ": expected 6 columns");
    double v[6];
    for (int i = 0; i < 6; ++i) {
      std::size_t used = 0;
      try {
        v[i] = std::stod(fields[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != fields[i].size() || !std::isfinite(v[i])) {
        throw Error(Stage::Ingest, where + ": malformed number '" + fields[i] + "'");
      }
    }
    gp.reconstruction.emplace_back(v[0], v[1], v[2]);
    gp.surveyed.emplace_back(v[3], v[4], v[5]);
  }
  if (gp.reconstruction.size() < 3) {
    throw Error(Stage::Ingest, path.string() + ": need at least 3 ground points");
  }
  return gp;
}

Mat3 gravity_alignment(const Vec3& gravity) {
  if (!(gravity.norm() > 0.0)) throw Error(Stage::Scale, "cannot gravity-align: gravity estimate is zero");
  return Quat::FromTwoVectors(gravity.normalized(), Vec3::UnitY()).toRotationMatrix();
}

std::vector<PoseSample> scaled_trajectory(std::span<const PoseSample> poses, double scale,
                                          const Vec3* gravity) {
  const Mat3 a = gravity ? gravity_alignment(*gravity) : Mat3::Identity();
  const Quat a_inv(Mat3(a.transpose()));
  std::vector<PoseSample> out;
  out.reserve(poses.size());
  for (const auto& p : poses) {
    // Positions move to the new world frame; world-to-camera rotations pick up A^T.
    out.push_back({p.t, a * (scale * p.position), (p.orientation * a_inv).normalized()});
  }
  return out;
}

Report cmd_estimate(const RunConfig& c) {
  validate(c);
  const auto in = load_inputs(c);
  const auto res = estimate(in.poses, in.imu, pipeline_options(c));
  Report r = base_report("estimate", c);
  r.inputs = in.digests;
  fill_estimate(r, res, c);
  if (!c.scaled_trajectory.empty()) {
    const auto scaled = scaled_trajectory(in.poses, res.solution.scale,
                                          c.gravity_aligned ? &res.solution.gravity : nullptr);
    std::ostringstream os;
    write_trajectory(os, scaled);
    write_text(c.scaled_trajectory, os.str());
  }
  return r;
}

Report cmd_align(const RunConfig& c) {
  validate(c);
  const auto in = load_inputs(c);
  const auto res = align_streams(in.poses, in.imu, pipeline_options(c));
  Report r = base_report("align", c);
  r.inputs = in.digests;
  r.alignment = res.alignment;
  r.rate = res.rate;
  r.clock_origin = res.clock_origin;
  r.warnings = res.warnings;
  if (c.record_timings) {
    StageTimings t;
    t.alignment_ms = res.alignment_ms;
    t.total_ms = res.alignment_ms;
    r.timings = t;
  }
  return r;
}

Report cmd_evaluate(const RunConfig& c) {
  validate(c);
  if (c.truth.empty() && c.ground_points.empty()) {
    throw Error(Stage::Evaluation, "evaluation needs a truth source",
                "pass --truth <truth.json> or --ground-points <csv>");
  }
  auto in = load_inputs(c);
  Report r = base_report("evaluate", c);
  EvaluationSummary eval;
  std::optional<GroundPoints> ground;

  if (!c.truth.empty()) {
    std::ifstream tin(c.truth);
    if (!tin) throw Error(Stage::Evaluation, "cannot open truth file '" + c.truth + "'");
    try {
      nlohmann::json j;
      tin >> j;
      eval.truth_scale = j.at("scale").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Stage::Evaluation, "truth file '" + c.truth + "' has no usable scale: " + e.what());
    }
    eval.truth_source = "truth";
    in.digests.push_back({"truth", c.truth, sha256_file(c.truth), 1});
  }
  if (!c.ground_points.empty()) {
    ground = parse_ground_points(c.ground_points);
    in.digests.push_back({"ground_points", c.ground_points, sha256_file(c.ground_points),
                          ground->reconstruction.size()});
    if (c.truth.empty()) {
      eval.truth_scale = similarity_scale(ground->reconstruction, ground->surveyed);
      eval.truth_source = "ground_points";
    }
  }
  if (!(eval.truth_scale > 0.0)) throw Error(Stage::Evaluation, "truth scale must be positive");
  r.inputs = in.digests;

  const auto options = pipeline_options(c);
  const auto res = estimate(in.poses, in.imu, options);
  fill_estimate(r, res, c);

  if (ground) {
    Vec3List scaled;
    for (const auto& p : ground->reconstruction) scaled.push_back(res.solution.scale * p);
    eval.ground_fit = GroundFit{scaled.size(), rigid_fit(scaled, ground->surveyed)};
  }

  const auto curve = convergence_curve(in.poses, in.imu, c.checkpoints, eval.truth_scale, options);
  eval.curve = curve.points;
  eval.notices = curve.notices;
  if (!c.curve.empty()) {
    std::ostringstream os;
    write_curve_csv(os, curve);
    write_text(c.curve, os.str());
  }
  r.evaluation = eval;
  return r;
}

nlohmann::json cmd_simulate(const RunConfig& c) {
  ScenarioSpec spec = default_scenario();
  if (!c.scenario.empty()) {
    std::ifstream in(c.scenario);
    if (!in) throw Error(Stage::Config, "cannot open scenario '" + c.scenario + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(Stage::Config, "scenario '" + c.scenario + "' is not valid JSON: " + e.what());
    }
    spec = scenario_from_json(j);
  }
  if (c.duration) spec.duration = *c.duration;
  validate(spec);
  const auto data = generate(spec, c.seed);

  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Stage::Config, "cannot create '" + dir.string() + "': " + ec.message());

  std::ostringstream traj, truth_traj, imu;
  write_trajectory(traj, data.camera_poses);
  write_trajectory(truth_traj, data.truth_poses);
  write_imu(imu, data.imu);
  write_text((dir / "trajectory.txt").string(), traj.str());
  write_text((dir / "truth_trajectory.txt").string(), truth_traj.str());
  write_text((dir / "imu.csv").string(), imu.str());
  write_text((dir / "truth.json").string(), truth_sidecar(spec, data, c.seed).dump(2) + "\n");

  return {{"out_dir", dir.string()},
          {"files", {"trajectory.txt", "truth_trajectory.txt", "imu.csv", "truth.json"}},
          {"seed", c.seed},
          {"camera_samples", data.camera_poses.size()},
          {"imu_samples", data.imu.size()},
          {"path_length_m", data.path_length}};
}

namespace {

void add_input_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--trajectory", c.trajectory, "Camera trajectory (t x y z qx qy qz qw)");
  sub->add_option("--imu", c.imu, "IMU CSV (t,gx,gy,gz,ax,ay,az)");
  sub->add_option("--report", c.report, "Report path (default: stdout)");
}

void add_estimation_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--rate", c.rate, "Common grid rate in Hz (0: IMU rate)");
  sub->add_option("--f-max", c.f_max, "Upper frequency of the spectral fit in Hz");
  sub->add_option("--g-norm", c.g_norm, "Gravity magnitude in m/s^2");
  sub->add_option("--search-halfwidth", c.search_halfwidth, "Time-offset search half-width in s");
  sub->add_option("--max-coarse-lag", c.max_coarse_lag, "Coarse cross-correlation lag limit in s");
  sub->add_option("--align-tolerance", c.align_tolerance, "Final time-offset bracket in s");
  sub->add_option("--initial-offset", c.initial_offset, "Skip the coarse search and center here (s)");
  sub->add_option("--q-min", c.q_min, "Smallest process-noise density on the grid");
  sub->add_option("--q-max", c.q_max, "Largest process-noise density on the grid");
  sub->add_option("--q-count", c.q_count, "Number of grid points");
  sub->add_flag("--skip-frequency-stage", c.skip_frequency_stage, "Report the time-domain solution");
  sub->add_flag("--no-smoothing", c.no_smoothing, "Double-difference raw positions instead of smoothing");
  sub->add_option("--window", c.window, "Spectral window")->check(CLI::IsMember({"rectangular", "hann"}));
  sub->add_flag_callback("--no-timings", [&c] { c.record_timings = false; },
                         "Omit wall-clock timings so reports are reproducible byte for byte");
}

std::string config_path_from(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  if (const char* env = std::getenv("IMUSCALE_CONFIG"); env != nullptr && *env != '\0') return env;
  return {};
}

void print_error(std::ostream& err, const Error& e) {
  err << "imuscale: " << e.what() << "\n";
  if (!e.hint().empty()) err << "  hint: " << e.hint() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  try {
    const std::string path = config_path_from(argc, argv);
    if (!path.empty()) c = load_config(path);
  } catch (const Error& e) {
    print_error(err, e);
    return exit_code(e.stage());
  }

  CLI::App app{"Metric scale recovery for monocular reconstructions from IMU data", "imuscale"};
  app.require_subcommand(1);
  std::string config_path;

  auto* est = app.add_subcommand("estimate", "Estimate scale, biases, gravity and alignment");
  add_input_options(est, c);
  add_estimation_options(est, c);
  est->add_option("--scaled-trajectory", c.scaled_trajectory, "Write the metric trajectory here");
  est->add_flag("--gravity-aligned", c.gravity_aligned, "Rotate the exported world so down is -y");

  auto* aln = app.add_subcommand("align", "Estimate only the camera-IMU time offset and rotation");
  add_input_options(aln, c);
  add_estimation_options(aln, c);

  auto* ev = app.add_subcommand("evaluate", "Scale error against ground truth and convergence curve");
  add_input_options(ev, c);
  add_estimation_options(ev, c);
  ev->add_option("--truth", c.truth, "Truth sidecar JSON with the true scale");
  ev->add_option("--ground-points", c.ground_points, "Ground point correspondences CSV");
  ev->add_option("--checkpoints", c.checkpoints, "Path-length checkpoints in m")->delimiter(',');
  ev->add_option("--curve", c.curve, "Write the convergence curve CSV here");

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic recording with known truth");
  sim->add_option("--scenario", c.scenario, "Scenario JSON (default: built-in scenario)");
  sim->add_option("--seed", c.seed, "Random seed");
  sim->add_option("--duration", c.duration, "Override the scenario duration in s");
  sim->add_option("--out-dir", c.out_dir, "Output directory");

  for (auto* sub : {est, aln, ev, sim}) {
    sub->add_option("--config", config_path, "JSON configuration (default: $IMUSCALE_CONFIG)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      out << cmd_simulate(c).dump(2) << "\n";
      return 0;
    }
    Report report;
    if (*est) report = cmd_estimate(c);
    if (*aln) report = cmd_align(c);
    if (*ev) report = cmd_evaluate(c);
    emit_report(report, out);
    for (const auto& w : report.warnings) err << "imuscale: warning: " << w << "\n";
    return 0;
  } catch (const Error& e) {
    print_error(err, e);
    return exit_code(e.stage());
  } catch (const std::exception& e) {
    err << "imuscale: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace imuscale::cli
