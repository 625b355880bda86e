#include "imuscale/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "imuscale/json.hpp"
#include "imuscale/kinematics.hpp"

namespace imuscale {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

void fail(const std::string& message) {
  throw Error(Stage::Config, "invalid scenario: " + message);
}

nlohmann::json sinusoids_to_json(const SinusoidSum& terms) {
  auto arr = nlohmann::json::array();
  for (const auto& s : terms) {
    arr.push_back({{"amplitude", s.amplitude}, {"frequency", s.frequency}, {"phase", s.phase}});
  }
  return arr;
}

SinusoidSum sinusoids_from_json(const nlohmann::json& j) {
  SinusoidSum terms;
  for (const auto& item : j) {
    terms.push_back({item.at("amplitude").get<double>(), item.at("frequency").get<double>(),
                     item.value("phase", 0.0)});
  }
  return terms;
}

std::size_t sample_count(double duration, double rate) {
  return static_cast<std::size_t>(std::llround(duration * rate));
}

}  // namespace

double evaluate(const SinusoidSum& terms, double t) {
  double v = 0.0;
  for (const auto& s : terms) v += s.amplitude * std::sin(kTwoPi * s.frequency * t + s.phase);
  return v;
}

double derivative(const SinusoidSum& terms, double t) {
  double v = 0.0;
  for (const auto& s : terms) {
    const double w = kTwoPi * s.frequency;
    v += s.amplitude * w * std::cos(w * t + s.phase);
  }
  return v;
}

double second_derivative(const SinusoidSum& terms, double t) {
  double v = 0.0;
  for (const auto& s : terms) {
    const double w = kTwoPi * s.frequency;
    v -= s.amplitude * w * w * std::sin(w * t + s.phase);
  }
  return v;
}

void validate(const ScenarioSpec& spec) {
  if (!(spec.duration > 0.0)) fail("duration must be positive");
  if (!(spec.imu_rate > 0.0)) fail("imu_rate must be positive");
  if (!(spec.cam_rate > 0.0)) fail("cam_rate must be positive");
  if (!(spec.g_norm > 0.0)) fail("g_norm must be positive");
  const double f_limit = std::min(spec.imu_rate, spec.cam_rate) / 4.0;
  for (const auto* group : {&spec.position, &spec.rotation}) {
    for (const auto& axis : *group) {
      for (const auto& s : axis) {
        if (!std::isfinite(s.amplitude) || !std::isfinite(s.phase)) fail("non-finite sinusoid");
        if (!(s.frequency >= 0.0) || !(s.frequency < f_limit)) {
          std::ostringstream os;
          os << "trajectory frequency " << s.frequency << " Hz must lie in [0, " << f_limit << ")";
          fail(os.str());
        }
      }
    }
  }
  if (std::abs(spec.base_orientation.norm() - 1.0) > 1e-9) fail("base_orientation must be a unit quaternion");
  const auto& truth = spec.truth;
  if (!(truth.scale > 0.0)) fail("truth scale must be positive");
  if (orthogonality_error(truth.sensor_to_camera) > 1e-9) fail("sensor_to_camera must be a proper rotation");
  if (!std::isfinite(truth.time_offset)) fail("time_offset must be finite");
  if (std::abs(truth.gravity.norm() - spec.g_norm) > 1e-9 * spec.g_norm) {
    fail("gravity norm must equal g_norm");
  }
  const auto& noise = spec.noise;
  for (double sigma : {noise.gyro_sigma, noise.accel_sigma, noise.pose_sigma, noise.jitter_amplitude,
                       noise.jitter_frequency}) {
    if (!(sigma >= 0.0)) fail("noise parameters must be non-negative");
  }
  if (sample_count(spec.duration, spec.cam_rate) < kMinTrajectorySamples) fail("fewer than 10 camera frames");
}

ScenarioSpec default_scenario() {
  ScenarioSpec spec;
  spec.duration = 60.0;
  spec.imu_rate = 100.0;
  spec.cam_rate = 30.0;
  spec.g_norm = 9.81;

  spec.position[0] = {{0.14, 0.23, 0.0}, {0.03, 0.61, 1.0}, {0.013, 0.97, 2.2}};
  spec.position[1] = {{0.12, 0.31, 0.5}, {0.025, 0.83, 0.0}};
  spec.position[2] = {{0.08, 0.17, 2.0}, {0.02, 0.47, 0.3}, {0.01, 1.07, 1.3}};

  spec.rotation[0] = {{0.35, 0.13, 0.0}, {0.10, 0.53, 1.1}};
  spec.rotation[1] = {{0.30, 0.21, 0.7}, {0.08, 0.67, 0.2}};
  spec.rotation[2] = {{0.25, 0.29, 1.9}, {0.07, 0.41, 2.5}};

  spec.base_orientation = Quat(Eigen::AngleAxisd(0.4, Vec3(1.0, 1.0, 0.0).normalized()));

  spec.truth.scale = 0.37;
  spec.truth.time_offset = 0.15;
  const double deg = std::numbers::pi / 180.0;
  spec.truth.sensor_to_camera = rot_x(90.0 * deg) * rot_z(10.0 * deg);
  spec.truth.gyro_bias = Vec3(0.01, -0.02, 0.005);
  spec.truth.accel_bias = Vec3(0.1, -0.05, 0.2);
  spec.truth.gravity = Vec3(0.15, -0.95, 0.27).normalized() * spec.g_norm;

  spec.noise.gyro_sigma = 0.005;
  spec.noise.accel_sigma = 0.05;
  spec.noise.pose_sigma = 0.002;
  return spec;
}

Trajectory::Trajectory(const ScenarioSpec& spec)
    : position_(spec.position),
      rotation_(spec.rotation),
      base_(spec.base_orientation.normalized().toRotationMatrix()),
      gravity_(spec.truth.gravity) {}

Vec3 Trajectory::position(double t) const {
  return Vec3(evaluate(position_[0], t), evaluate(position_[1], t), evaluate(position_[2], t));
}

Vec3 Trajectory::velocity(double t) const {
  return Vec3(derivative(position_[0], t), derivative(position_[1], t), derivative(position_[2], t));
}

Vec3 Trajectory::acceleration(double t) const {
  return Vec3(second_derivative(position_[0], t), second_derivative(position_[1], t),
              second_derivative(position_[2], t));
}

Mat3 Trajectory::camera_to_world(double t) const {
  return base_ * rot_z(evaluate(rotation_[0], t)) * rot_y(evaluate(rotation_[1], t)) *
         rot_x(evaluate(rotation_[2], t));
}

Vec3 Trajectory::body_rate(double t) const {
  // C = B Rz(a) Ry(b) Rx(c); C^T dC/dt = [w]_x with
  // w = c' e_x + b' Rx^T e_y + a' Rx^T Ry^T e_z.
  const double b = evaluate(rotation_[1], t);
  const double c = evaluate(rotation_[2], t);
  const Mat3 rx_t = rot_x(c).transpose();
  const Mat3 ry_t = rot_y(b).transpose();
  return derivative(rotation_[2], t) * Vec3::UnitX() + derivative(rotation_[1], t) * (rx_t * Vec3::UnitY()) +
         derivative(rotation_[0], t) * (rx_t * ry_t * Vec3::UnitZ());
}

Vec3 Trajectory::specific_force(double t) const {
  return world_to_camera(t) * (acceleration(t) + gravity_);
}

double Trajectory::path_length(double t0, double t1) const {
  if (!(t1 > t0)) return 0.0;
  // Composite Simpson on |v| with ~1 ms panels.
  std::size_t panels = static_cast<std::size_t>(std::ceil((t1 - t0) * 1000.0));
  if (panels % 2) ++panels;
  const double h = (t1 - t0) / static_cast<double>(panels);
  double acc = velocity(t0).norm() + velocity(t1).norm();
  for (std::size_t i = 1; i < panels; ++i) {
    acc += (i % 2 ? 4.0 : 2.0) * velocity(t0 + h * static_cast<double>(i)).norm();
  }
  return acc * h / 3.0;
}

SimulatedData generate(const ScenarioSpec& spec, std::uint64_t seed) {
  validate(spec);
  const Trajectory traj(spec);
  const auto& truth = spec.truth;
  const auto& noise = spec.noise;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](double sigma) {
    return Vec3(sigma * normal(rng), sigma * normal(rng), sigma * normal(rng));
  };

  SimulatedData out;
  const std::size_t n_cam = sample_count(spec.duration, spec.cam_rate);
  out.truth_poses.reserve(n_cam);
  out.camera_poses.reserve(n_cam);
  for (std::size_t k = 0; k < n_cam; ++k) {
    const double t = static_cast<double>(k) / spec.cam_rate;
    Quat world_to_camera(traj.world_to_camera(t));
    world_to_camera.normalize();
    const Vec3 p = traj.position(t);
    out.truth_poses.push_back({t, p, world_to_camera});
    out.camera_poses.push_back({t, p / truth.scale + gaussian(noise.pose_sigma), world_to_camera});
  }

  const Mat3 sensor_from_camera = truth.sensor_to_camera.transpose();
  const std::size_t n_imu = sample_count(spec.duration, spec.imu_rate);
  out.imu.reserve(n_imu);
  for (std::size_t k = 0; k < n_imu; ++k) {
    const double stamp = static_cast<double>(k) / spec.imu_rate;
    const double t = stamp - truth.time_offset -
                     noise.jitter_amplitude *
                         std::sin(kTwoPi * noise.jitter_frequency * stamp + noise.jitter_phase);
    ImuSample s;
    s.t = stamp;
    s.gyro = sensor_from_camera * (traj.body_rate(t) - truth.gyro_bias) + gaussian(noise.gyro_sigma);
    s.accel = sensor_from_camera * (traj.specific_force(t) + truth.accel_bias) + gaussian(noise.accel_sigma);
    out.imu.push_back(s);
  }

  out.path_length = traj.path_length(0.0, out.truth_poses.back().t);
  return out;
}

nlohmann::json to_json(const ScenarioSpec& spec) {
  nlohmann::json j;
  j["duration"] = spec.duration;
  j["imu_rate"] = spec.imu_rate;
  j["cam_rate"] = spec.cam_rate;
  j["g_norm"] = spec.g_norm;
  j["position"] = {sinusoids_to_json(spec.position[0]), sinusoids_to_json(spec.position[1]),
                   sinusoids_to_json(spec.position[2])};
  j["rotation_zyx"] = {sinusoids_to_json(spec.rotation[0]), sinusoids_to_json(spec.rotation[1]),
                       sinusoids_to_json(spec.rotation[2])};
  j["base_orientation"] = quat_to_json(spec.base_orientation);
  j["truth"] = {{"scale", spec.truth.scale},
                {"sensor_to_camera", mat_to_json(spec.truth.sensor_to_camera)},
                {"time_offset", spec.truth.time_offset},
                {"gyro_bias", vec_to_json(spec.truth.gyro_bias)},
                {"accel_bias", vec_to_json(spec.truth.accel_bias)},
                {"gravity", vec_to_json(spec.truth.gravity)}};
  j["noise"] = {{"gyro_sigma", spec.noise.gyro_sigma},
                {"accel_sigma", spec.noise.accel_sigma},
                {"pose_sigma", spec.noise.pose_sigma},
                {"jitter_amplitude", spec.noise.jitter_amplitude},
                {"jitter_frequency", spec.noise.jitter_frequency},
                {"jitter_phase", spec.noise.jitter_phase}};
  return j;
}

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  // Missing keys keep their default-scenario values.
  ScenarioSpec spec = default_scenario();
  try {
    spec.duration = j.value("duration", spec.duration);
    spec.imu_rate = j.value("imu_rate", spec.imu_rate);
    spec.cam_rate = j.value("cam_rate", spec.cam_rate);
    spec.g_norm = j.value("g_norm", spec.g_norm);
    if (j.contains("position")) {
      for (int a = 0; a < 3; ++a) spec.position[a] = sinusoids_from_json(j.at("position").at(a));
    }
    if (j.contains("rotation_zyx")) {
      for (int a = 0; a < 3; ++a) spec.rotation[a] = sinusoids_from_json(j.at("rotation_zyx").at(a));
    }
    if (j.contains("base_orientation")) spec.base_orientation = quat_from_json(j.at("base_orientation"));
    if (j.contains("truth")) {
      const auto& t = j.at("truth");
      spec.truth.scale = t.value("scale", spec.truth.scale);
      if (t.contains("sensor_to_camera")) spec.truth.sensor_to_camera = mat_from_json(t.at("sensor_to_camera"));
      spec.truth.time_offset = t.value("time_offset", spec.truth.time_offset);
      if (t.contains("gyro_bias")) spec.truth.gyro_bias = vec_from_json(t.at("gyro_bias"));
      if (t.contains("accel_bias")) spec.truth.accel_bias = vec_from_json(t.at("accel_bias"));
      if (t.contains("gravity")) spec.truth.gravity = vec_from_json(t.at("gravity"));
    } else if (j.contains("g_norm")) {
      spec.truth.gravity = spec.truth.gravity.normalized() * spec.g_norm;
    }
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      spec.noise.gyro_sigma = n.value("gyro_sigma", spec.noise.gyro_sigma);
      spec.noise.accel_sigma = n.value("accel_sigma", spec.noise.accel_sigma);
      spec.noise.pose_sigma = n.value("pose_sigma", spec.noise.pose_sigma);
      spec.noise.jitter_amplitude = n.value("jitter_amplitude", spec.noise.jitter_amplitude);
      spec.noise.jitter_frequency = n.value("jitter_frequency", spec.noise.jitter_frequency);
      spec.noise.jitter_phase = n.value("jitter_phase", spec.noise.jitter_phase);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Stage::Config, std::string("malformed scenario JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(Stage::Config, std::string("malformed scenario JSON: ") + e.what());
  }
  return spec;
}

nlohmann::json truth_sidecar(const ScenarioSpec& spec, const SimulatedData& data, std::uint64_t seed) {
  nlohmann::json j;
  j["scale"] = spec.truth.scale;
  j["time_offset"] = spec.truth.time_offset;
  j["sensor_to_camera"] = mat_to_json(spec.truth.sensor_to_camera);
  j["gyro_bias"] = vec_to_json(spec.truth.gyro_bias);
  j["accel_bias"] = vec_to_json(spec.truth.accel_bias);
  j["gravity"] = vec_to_json(spec.truth.gravity);
  j["path_length_m"] = data.path_length;
  j["seed"] = seed;
  j["camera_samples"] = data.camera_poses.size();
  j["imu_samples"] = data.imu.size();
  j["scenario"] = to_json(spec);
  return j;
}

}  // namespace imuscale
