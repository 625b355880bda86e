#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imuscale/evaluate.hpp"
#include "imuscale/pipeline.hpp"
#include "imuscale_cli/config.hpp"

namespace imuscale::cli {

inline constexpr const char* kReportFormat = "imuscale-report/1";

struct InputDigest {
  std::string role;  // "trajectory", "imu", "truth", "ground_points"
  std::string path;
  std::string sha256;
  std::size_t records = 0;
};

struct SmootherSummary {
  bool enabled = true;
  double process_noise = 0.0;
  double measurement_variance = 0.0;
};

struct GroundFit {
  std::size_t points = 0;
  FitResult fit;
};

struct EvaluationSummary {
  double truth_scale = 0.0;
  std::string truth_source;
  std::vector<ConvergencePoint> curve;
  std::vector<std::string> notices;
  std::optional<GroundFit> ground_fit;
};

struct Report {
  std::string command;
  RunConfig config;
  std::vector<InputDigest> inputs;
  std::optional<ScaleSolution> solution;
  std::optional<ScaleSolution> time_domain;
  std::optional<AlignmentResult> alignment;
  std::optional<SmootherSummary> smoother;
  std::optional<double> rate;
  std::optional<double> clock_origin;
  std::optional<std::size_t> samples_used;
  std::optional<EvaluationSummary> evaluation;
  std::optional<StageTimings> timings;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

/// Pretty-printed JSON with sorted keys and a trailing newline.
std::string serialize(const Report& report);

nlohmann::json to_json(const ScaleSolution& s);
ScaleSolution solution_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AlignmentResult& a);
AlignmentResult alignment_from_json(const nlohmann::json& j);

}  // namespace imuscale::cli
