#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imuscale/pipeline.hpp"

namespace imuscale::cli {

/// Everything a command needs. Field defaults are the documented defaults;
/// JSON keys are the snake_case field names, CLI flags the kebab-case ones.
struct RunConfig {
  // inputs
  std::string trajectory;
  std::string imu;
  std::string truth;          // truth sidecar written by `simulate`
  std::string ground_points;  // CSV: reconstruction x,y,z then surveyed X,Y,Z
  std::string scenario;       // scenario JSON for `simulate`

  // outputs
  std::string report;  // empty: stdout
  std::string scaled_trajectory;
  bool gravity_aligned = false;
  std::string curve;
  std::string out_dir = ".";

  // estimation
  double rate = 0.0;  // 0: IMU nominal rate
  double f_max = 1.2;
  double g_norm = 9.81;
  double search_halfwidth = 0.5;
  double max_coarse_lag = 1.0;
  double align_tolerance = 1e-4;
  std::optional<double> initial_offset;
  double q_min = 1e-4;
  double q_max = 1e4;
  int q_count = 17;
  bool skip_frequency_stage = false;
  bool no_smoothing = false;
  std::string window = "rectangular";

  // simulation and evaluation
  std::uint64_t seed = 0;
  std::optional<double> duration;
  std::vector<double> checkpoints{1.0, 2.0, 6.0, 14.0};

  bool record_timings = true;
};

nlohmann::json to_json(const RunConfig& config);

/// Missing keys keep their defaults; unknown keys and wrong types raise
/// Error(Stage::Config).
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::string& path);

/// Throws Error(Stage::Config) on out-of-range values.
void validate(const RunConfig& config);

PipelineOptions pipeline_options(const RunConfig& config);

}  // namespace imuscale::cli
