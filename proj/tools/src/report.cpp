#include "imuscale_cli/report.hpp"

#include "imuscale/json.hpp"

namespace imuscale::cli {
namespace {

using nlohmann::json;

template <typename T, typename F>
void put_optional(json& j, const char* key, const std::optional<T>& v, F&& convert) {
  if (v) j[key] = convert(*v);
}

json to_json(const StageTimings& t) {
  return {{"resample", t.resample_ms},           {"alignment", t.alignment_ms},
          {"smoothing", t.smoothing_ms},         {"time_domain", t.time_domain_ms},
          {"frequency_domain", t.frequency_domain_ms}, {"total", t.total_ms}};
}

StageTimings timings_from_json(const json& j) {
  StageTimings t;
  t.resample_ms = j.at("resample").get<double>();
  t.alignment_ms = j.at("alignment").get<double>();
  t.smoothing_ms = j.at("smoothing").get<double>();
  t.time_domain_ms = j.at("time_domain").get<double>();
  t.frequency_domain_ms = j.at("frequency_domain").get<double>();
  t.total_ms = j.at("total").get<double>();
  return t;
}

json to_json(const FitResult& f) {
  return {{"rotation", mat_to_json(f.rotation)},
          {"translation", vec_to_json(f.translation)},
          {"rmse", f.rmse},
          {"degenerate", f.degenerate}};
}

FitResult fit_from_json(const json& j) {
  FitResult f;
  f.rotation = mat_from_json(j.at("rotation"));
  f.translation = vec_from_json(j.at("translation"));
  f.rmse = j.at("rmse").get<double>();
  f.degenerate = j.at("degenerate").get<bool>();
  return f;
}

json to_json(const EvaluationSummary& e) {
  json curve = json::array();
  for (const auto& p : e.curve) {
    curve.push_back({{"distance_m", p.distance_traveled},
                     {"error_percent", p.scale_error_percent},
                     {"scale", p.scale}});
  }
  json j{{"truth_scale", e.truth_scale},
         {"truth_source", e.truth_source},
         {"curve", curve},
         {"notices", e.notices}};
  if (e.ground_fit) {
    j["ground_fit"] = to_json(e.ground_fit->fit);
    j["ground_fit"]["points"] = e.ground_fit->points;
  }
  return j;
}

EvaluationSummary evaluation_from_json(const json& j) {
  EvaluationSummary e;
  e.truth_scale = j.at("truth_scale").get<double>();
  e.truth_source = j.at("truth_source").get<std::string>();
  for (const auto& p : j.at("curve")) {
    e.curve.push_back({p.at("distance_m").get<double>(), p.at("error_percent").get<double>(),
                       p.at("scale").get<double>()});
  }
  e.notices = j.at("notices").get<std::vector<std::string>>();
  if (j.contains("ground_fit")) {
    GroundFit g;
    g.fit = fit_from_json(j.at("ground_fit"));
    g.points = j.at("ground_fit").at("points").get<std::size_t>();
    e.ground_fit = g;
  }
  return e;
}

}  // namespace

json to_json(const ScaleSolution& s) {
  return {{"scale", s.scale},
          {"accel_bias", vec_to_json(s.accel_bias)},
          {"gravity", vec_to_json(s.gravity)},
          {"objective_time", s.objective_time},
          {"objective_freq", s.objective_freq},
          {"f_max", s.f_max},
          {"converged", s.converged},
          {"rank_deficient", s.rank_deficient},
          {"failed", s.failed},
          {"iterations", s.iterations},
          {"null_direction", s.null_direction},
          {"warnings", s.warnings}};
}

ScaleSolution solution_from_json(const json& j) {
  ScaleSolution s;
  s.scale = j.at("scale").get<double>();
  s.accel_bias = vec_from_json(j.at("accel_bias"));
  s.gravity = vec_from_json(j.at("gravity"));
  s.objective_time = j.at("objective_time").get<double>();
  s.objective_freq = j.at("objective_freq").get<double>();
  s.f_max = j.at("f_max").get<double>();
  s.converged = j.at("converged").get<bool>();
  s.rank_deficient = j.at("rank_deficient").get<bool>();
  s.failed = j.at("failed").get<bool>();
  s.iterations = j.at("iterations").get<int>();
  s.null_direction = j.at("null_direction").get<std::vector<double>>();
  s.warnings = j.at("warnings").get<std::vector<std::string>>();
  return s;
}

json to_json(const AlignmentResult& a) {
  return {{"sensor_to_camera", mat_to_json(a.sensor_to_camera)},
          {"gyro_bias", vec_to_json(a.gyro_bias)},
          {"time_offset", a.time_offset},
          {"rms_residual", a.rms_residual},
          {"iterations", a.iterations},
          {"coarse_offset", a.coarse_offset},
          {"search_window", {a.search_lo, a.search_hi}},
          {"samples_used", a.samples_used},
          {"degenerate", a.degenerate},
          {"at_boundary", a.at_boundary},
          {"warnings", a.warnings}};
}

AlignmentResult alignment_from_json(const json& j) {
  AlignmentResult a;
  a.sensor_to_camera = mat_from_json(j.at("sensor_to_camera"));
  a.gyro_bias = vec_from_json(j.at("gyro_bias"));
  a.time_offset = j.at("time_offset").get<double>();
  a.rms_residual = j.at("rms_residual").get<double>();
  a.iterations = j.at("iterations").get<int>();
  a.coarse_offset = j.at("coarse_offset").get<double>();
  a.search_lo = j.at("search_window").at(0).get<double>();
  a.search_hi = j.at("search_window").at(1).get<double>();
  a.samples_used = j.at("samples_used").get<std::size_t>();
  a.degenerate = j.at("degenerate").get<bool>();
  a.at_boundary = j.at("at_boundary").get<bool>();
  a.warnings = j.at("warnings").get<std::vector<std::string>>();
  return a;
}

json to_json(const Report& r) {
  json j;
  j["format"] = kReportFormat;
  j["command"] = r.command;
  j["config"] = to_json(r.config);
  json inputs = json::array();
  for (const auto& in : r.inputs) {
    inputs.push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}, {"records", in.records}});
  }
  j["inputs"] = inputs;
  put_optional(j, "solution", r.solution, [](const auto& s) { return to_json(s); });
  put_optional(j, "time_domain", r.time_domain, [](const auto& s) { return to_json(s); });
  put_optional(j, "alignment", r.alignment, [](const auto& a) { return to_json(a); });
  put_optional(j, "smoother", r.smoother, [](const SmootherSummary& s) {
    return json{{"enabled", s.enabled},
                {"process_noise", s.process_noise},
                {"measurement_variance", s.measurement_variance}};
  });
  put_optional(j, "rate", r.rate, [](double v) { return v; });
  put_optional(j, "clock_origin", r.clock_origin, [](double v) { return v; });
  put_optional(j, "samples_used", r.samples_used, [](std::size_t v) { return v; });
  put_optional(j, "evaluation", r.evaluation, [](const auto& e) { return to_json(e); });
  put_optional(j, "timings_ms", r.timings, [](const auto& t) { return to_json(t); });
  j["warnings"] = r.warnings;
  return j;
}

Report report_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kReportFormat) {
      throw Error(Stage::Config, "unsupported report format '" + j.at("format").get<std::string>() + "'");
    }
    Report r;
    r.command = j.at("command").get<std::string>();
    r.config = config_from_json(j.at("config"));
    for (const auto& in : j.at("inputs")) {
      r.inputs.push_back({in.at("role").get<std::string>(), in.at("path").get<std::string>(),
                          in.at("sha256").get<std::string>(), in.at("records").get<std::size_t>()});
    }
    if (j.contains("solution")) r.solution = solution_from_json(j.at("solution"));
    if (j.contains("time_domain")) r.time_domain = solution_from_json(j.at("time_domain"));
    if (j.contains("alignment")) r.alignment = alignment_from_json(j.at("alignment"));
    if (j.contains("smoother")) {
      const auto& s = j.at("smoother");
      r.smoother = SmootherSummary{s.at("enabled").get<bool>(), s.at("process_noise").get<double>(),
                                   s.at("measurement_variance").get<double>()};
    }
    if (j.contains("rate")) r.rate = j.at("rate").get<double>();
    if (j.contains("clock_origin")) r.clock_origin = j.at("clock_origin").get<double>();
    if (j.contains("samples_used")) r.samples_used = j.at("samples_used").get<std::size_t>();
    if (j.contains("evaluation")) r.evaluation = evaluation_from_json(j.at("evaluation"));
    if (j.contains("timings_ms")) r.timings = timings_from_json(j.at("timings_ms"));
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw Error(Stage::Config, std::string("malformed report: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(Stage::Config, std::string("malformed report: ") + e.what());
  }
}

std::string serialize(const Report& report) { return to_json(report).dump(2) + "\n"; }

}  // namespace imuscale::cli
