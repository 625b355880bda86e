#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imuscale_cli/config.hpp"
#include "imuscale_cli/report.hpp"

namespace imuscale::cli {

/// 0 ok, 1 configuration or usage, then one code per pipeline stage.
int exit_code(Stage stage);

std::string sha256_file(const std::filesystem::path& path);

struct GroundPoints {
  Vec3List reconstruction;  // reconstruction units
  Vec3List surveyed;        // metres
};

/// CSV rows "x,y,z,X,Y,Z"; '#' comments and one header row are skipped.
GroundPoints parse_ground_points(const std::filesystem::path& path);

/// Rotation taking the world frame to one where the gravity reaction vector
/// points along +y, so physical down is -y.
Mat3 gravity_alignment(const Vec3& gravity);

/// Input poses with metric positions, optionally re-expressed in the
/// gravity-aligned world frame.
std::vector<PoseSample> scaled_trajectory(std::span<const PoseSample> poses, double scale,
                                          const Vec3* gravity);

Report cmd_estimate(const RunConfig& config);
Report cmd_align(const RunConfig& config);
Report cmd_evaluate(const RunConfig& config);
/// Writes trajectory.txt, truth_trajectory.txt, imu.csv and truth.json into
/// config.out_dir and returns a manifest.
nlohmann::json cmd_simulate(const RunConfig& config);

/// Full command-line entry point. Reports go to `out` unless a report path
/// is configured; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace imuscale::cli
