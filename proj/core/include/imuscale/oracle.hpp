#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "imuscale/ingest.hpp"
#include "imuscale/types.hpp"

namespace imuscale {

struct Sinusoid {
  double amplitude = 0.0;
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad
};
using SinusoidSum = std::vector<Sinusoid>;

double evaluate(const SinusoidSum& terms, double t);
double derivative(const SinusoidSum& terms, double t);
double second_derivative(const SinusoidSum& terms, double t);

struct ScenarioTruth {
  double scale = 0.37;  // metres per reconstruction unit
  Mat3 sensor_to_camera = Mat3::Identity();
  double time_offset = 0.15;  // IMU clock = camera clock + time_offset
  Vec3 gyro_bias = Vec3::Zero();   // camera frame: w_vis = R_S w_imu + gyro_bias
  Vec3 accel_bias = Vec3::Zero();  // camera frame: a_imu_C = s a_vis_C + accel_bias + R g
  Vec3 gravity = Vec3(0.0, 0.0, 9.81);  // world-frame gravity reaction
};

struct ScenarioNoise {
  double gyro_sigma = 0.0;        // rad/s
  double accel_sigma = 0.0;       // m/s^2
  double pose_sigma = 0.0;        // reconstruction units, per axis
  double jitter_amplitude = 0.0;  // s, sinusoidal IMU timestamp error
  double jitter_frequency = 0.0;  // Hz
  double jitter_phase = 0.0;      // rad
};

/// Sum-of-sinusoids camera motion. Position is metric, in the world frame.
/// Orientation: camera-to-world = base * Rz(a) * Ry(b) * Rx(c) with the three
/// angles given by `rotation[0..2]`.
struct ScenarioSpec {
  double duration = 60.0;
  double imu_rate = 100.0;
  double cam_rate = 30.0;
  double g_norm = 9.81;
  std::array<SinusoidSum, 3> position;
  std::array<SinusoidSum, 3> rotation;
  Quat base_orientation = Quat::Identity();
  ScenarioTruth truth;
  ScenarioNoise noise;
};

/// Throws Error(Stage::Config) describing the first violated invariant.
void validate(const ScenarioSpec& spec);

/// 60 s at 100 Hz IMU / 30 Hz camera, roughly 15 m of hand-held motion that
/// rotates about every axis, smartphone-grade noise.
ScenarioSpec default_scenario();

/// Closed-form evaluation of the scenario motion.
class Trajectory {
 public:
  explicit Trajectory(const ScenarioSpec& spec);

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  Vec3 acceleration(double t) const;
  Mat3 camera_to_world(double t) const;
  Mat3 world_to_camera(double t) const { return camera_to_world(t).transpose(); }
  /// Angular velocity of the camera expressed in the camera frame.
  Vec3 body_rate(double t) const;
  /// Noise-free camera-frame specific force: R(t) (a(t) + g).
  Vec3 specific_force(double t) const;

  /// Arc length of the metric position over [t0, t1].
  double path_length(double t0, double t1) const;

 private:
  std::array<SinusoidSum, 3> position_;
  std::array<SinusoidSum, 3> rotation_;
  Mat3 base_;
  Vec3 gravity_;
};

struct SimulatedData {
  std::vector<PoseSample> truth_poses;   // metric, noise-free, camera clock
  std::vector<PoseSample> camera_poses;  // reconstruction units, with noise
  std::vector<ImuSample> imu;            // sensor frame, IMU clock
  double path_length = 0.0;              // metres
};

/// Deterministic for a given (spec, seed).
SimulatedData generate(const ScenarioSpec& spec, std::uint64_t seed);

nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const nlohmann::json& j);

/// Ground-truth sidecar written next to simulated data.
nlohmann::json truth_sidecar(const ScenarioSpec& spec, const SimulatedData& data, std::uint64_t seed);

}  // namespace imuscale
