#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "imuscale/types.hpp"

namespace imuscale {

/// One inertial reading on the sensor clock. `accel` is specific force
/// (motion plus gravity reaction) in the sensor frame.
struct ImuSample {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

/// One camera pose on the camera clock. `orientation` is the world-to-camera
/// rotation; `position` is in arbitrary reconstruction units.
struct PoseSample {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

inline constexpr std::size_t kMinTrajectorySamples = 10;
inline constexpr double kMaxAccelNorm = 200.0;

// Trajectory files: "t x y z qx qy qz qw" per line, '#' comments ignored.
std::vector<PoseSample> parse_trajectory(const std::filesystem::path& path);
std::vector<PoseSample> parse_trajectory(std::istream& in, std::string_view source = "<stream>");
void write_trajectory(std::ostream& out, std::span<const PoseSample> poses);
void write_trajectory(const std::filesystem::path& path, std::span<const PoseSample> poses);

// IMU files: CSV "t,gx,gy,gz,ax,ay,az", optional header row.
std::vector<ImuSample> parse_imu(const std::filesystem::path& path);
std::vector<ImuSample> parse_imu(std::istream& in, std::string_view source = "<stream>");
void write_imu(std::ostream& out, std::span<const ImuSample> samples);
void write_imu(const std::filesystem::path& path, std::span<const ImuSample> samples);

/// Shifts both streams so the first pose sits at t = 0. Returns the shift.
double shift_clock_origin(std::vector<PoseSample>& poses, std::vector<ImuSample>& imu);

/// Nominal sample rate of a timestamped stream: (n - 1) / duration.
double nominal_rate(std::span<const ImuSample> samples);
double nominal_rate(std::span<const PoseSample> poses);

/// Linear position / shortest-arc slerp orientation onto a uniform grid
/// spanning [first, last] pose time. Irregular frame spacing (beyond 25% of
/// the median interval) and downsampling are reported through `diag`.
PoseSeries resample_poses(std::span<const PoseSample> poses, double rate,
                          Diagnostics* diag = nullptr);

/// Linear interpolation of gyro and accel onto `grid`. Throws if the grid
/// leaves the IMU time range.
ImuSeries resample_imu(std::span<const ImuSample> samples, const TimeBase& grid);

Quat slerp_shortest(const Quat& a, const Quat& b, double u);

/// Linear interpolation of a uniform series at an arbitrary time inside its span.
Vec3 sample_linear(const Vec3Series& series, double t);
double sample_linear(const ScalarSeries& series, double t);

}  // namespace imuscale
