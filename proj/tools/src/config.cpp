#include "imuscale_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace imuscale::cli {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "trajectory",     "imu",           "truth",           "ground_points",
      "scenario",       "report",        "scaled_trajectory", "gravity_aligned",
      "curve",          "out_dir",       "rate",            "f_max",
      "g_norm",         "search_halfwidth", "max_coarse_lag", "align_tolerance",
      "initial_offset", "q_min",         "q_max",           "q_count",
      "skip_frequency_stage", "no_smoothing", "window",     "seed",
      "duration",       "checkpoints",   "record_timings"};
  return keys;
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

template <typename T>
void read(const nlohmann::json& j, const char* key, std::optional<T>& field) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    field.reset();
  } else {
    field = j.at(key).get<T>();
  }
}

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
  return {
      {"trajectory", c.trajectory},
      {"imu", c.imu},
      {"truth", c.truth},
      {"ground_points", c.ground_points},
      {"scenario", c.scenario},
      {"report", c.report},
      {"scaled_trajectory", c.scaled_trajectory},
      {"gravity_aligned", c.gravity_aligned},
      {"curve", c.curve},
      {"out_dir", c.out_dir},
      {"rate", c.rate},
      {"f_max", c.f_max},
      {"g_norm", c.g_norm},
      {"search_halfwidth", c.search_halfwidth},
      {"max_coarse_lag", c.max_coarse_lag},
      {"align_tolerance", c.align_tolerance},
      {"initial_offset", optional_json(c.initial_offset)},
      {"q_min", c.q_min},
      {"q_max", c.q_max},
      {"q_count", c.q_count},
      {"skip_frequency_stage", c.skip_frequency_stage},
      {"no_smoothing", c.no_smoothing},
      {"window", c.window},
      {"seed", c.seed},
      {"duration", optional_json(c.duration)},
      {"checkpoints", c.checkpoints},
      {"record_timings", c.record_timings},
  };
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Stage::Config, "configuration must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known_keys().contains(item.key())) {
      throw Error(Stage::Config, "unknown configuration key '" + item.key() + "'");
    }
  }
  RunConfig c;
  try {
    read(j, "trajectory", c.trajectory);
    read(j, "imu", c.imu);
    read(j, "truth", c.truth);
    read(j, "ground_points", c.ground_points);
    read(j, "scenario", c.scenario);
    read(j, "report", c.report);
    read(j, "scaled_trajectory", c.scaled_trajectory);
    read(j, "gravity_aligned", c.gravity_aligned);
    read(j, "curve", c.curve);
    read(j, "out_dir", c.out_dir);
    read(j, "rate", c.rate);
    read(j, "f_max", c.f_max);
    read(j, "g_norm", c.g_norm);
    read(j, "search_halfwidth", c.search_halfwidth);
    read(j, "max_coarse_lag", c.max_coarse_lag);
    read(j, "align_tolerance", c.align_tolerance);
    read(j, "initial_offset", c.initial_offset);
    read(j, "q_min", c.q_min);
    read(j, "q_max", c.q_max);
    read(j, "q_count", c.q_count);
    read(j, "skip_frequency_stage", c.skip_frequency_stage);
    read(j, "no_smoothing", c.no_smoothing);
    read(j, "window", c.window);
    read(j, "seed", c.seed);
    read(j, "duration", c.duration);
    read(j, "checkpoints", c.checkpoints);
    read(j, "record_timings", c.record_timings);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Stage::Config, std::string("malformed configuration: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Stage::Config, "cannot open configuration '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Stage::Config, "configuration '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(Stage::Config, msg); };
  if (!(c.rate >= 0.0)) fail("rate must be non-negative");
  if (!(c.f_max > 0.0)) fail("f_max must be positive");
  if (!(c.g_norm > 0.0)) fail("g_norm must be positive");
  if (!(c.search_halfwidth > 0.0)) fail("search_halfwidth must be positive");
  if (!(c.max_coarse_lag >= 0.0)) fail("max_coarse_lag must be non-negative");
  if (!(c.align_tolerance > 0.0)) fail("align_tolerance must be positive");
  if (c.initial_offset && !std::isfinite(*c.initial_offset)) fail("initial_offset must be finite");
  if (!(c.q_min > 0.0) || !(c.q_max >= c.q_min)) fail("smoother grid needs 0 < q_min <= q_max");
  if (c.q_count < 1) fail("q_count must be at least 1");
  if (c.window != "rectangular" && c.window != "hann") fail("window must be 'rectangular' or 'hann'");
  if (c.duration && !(*c.duration > 0.0)) fail("duration must be positive");
}

PipelineOptions pipeline_options(const RunConfig& c) {
  PipelineOptions o;
  o.rate = c.rate;
  o.align.search_halfwidth = c.search_halfwidth;
  o.align.max_coarse_lag = c.max_coarse_lag;
  o.align.tolerance = c.align_tolerance;
  o.align.initial_offset = c.initial_offset;
  o.smoother.q_grid = log_spaced_grid(c.q_min, c.q_max, c.q_count);
  o.smoothing = !c.no_smoothing;
  o.frequency_stage = !c.skip_frequency_stage;
  o.frequency.f_max = c.f_max;
  o.frequency.g_norm = c.g_norm;
  o.window = c.window == "hann" ? Window::Hann : Window::Rectangular;
  return o;
}

}  // namespace imuscale::cli
