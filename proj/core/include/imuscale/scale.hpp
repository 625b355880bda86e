#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imuscale/spectrum.hpp"
#include "imuscale/types.hpp"

namespace imuscale {

inline constexpr double kDefaultGravityNorm = 9.81;
inline constexpr double kDefaultMaxFrequency = 1.2;

/// Unknowns of the time-domain fit. Measurement model in the camera frame:
///   a_imu[k] = s * a_vis[k] + b + R[k] g
enum class ScaleModel { Scale, ScaleBias, ScaleBiasGravity };

struct ScaleSolution {
  double scale = 1.0;                  // metres per reconstruction unit
  Vec3 accel_bias = Vec3::Zero();      // b^a_C, m/s^2
  Vec3 gravity = Vec3::Zero();         // g_W, accelerometer reaction, m/s^2
  double objective_time = 0.0;         // sum of squared time-domain residuals
  double objective_freq = 0.0;         // amplitude-spectrum objective
  double f_max = 0.0;
  bool converged = false;
  bool rank_deficient = false;
  bool failed = false;
  int iterations = 0;
  std::vector<double> null_direction;  // over (s, b, g) when rank_deficient
  std::vector<std::string> warnings;
};

ScaleSolution estimate_time_domain(std::span<const Vec3> a_vis_camera,
                                   std::span<const Vec3> a_imu_camera,
                                   std::span<const Mat3> rotations,
                                   ScaleModel model = ScaleModel::ScaleBiasGravity);

/// sum_{f_k <= f_max} || s |A_V(f_k)| - |A_I(f_k; b, g)| ||^2 with per-axis magnitudes.
double frequency_objective(const SpectrumSet& spectra, double f_max, double scale,
                           const Vec3& bias, const Vec3& gravity);

struct FrequencyOptions {
  double f_max = kDefaultMaxFrequency;
  double g_norm = kDefaultGravityNorm;
  int max_iterations = 20000;
  double simplex_tolerance = 1e-8;
};

/// Refines (s, b, g) on the sphere ||g|| = g_norm by minimizing the
/// amplitude-spectrum objective with a Nelder-Mead simplex, starting from the
/// time-domain solution.
ScaleSolution estimate_frequency_domain(const SpectrumSet& spectra, const ScaleSolution& init,
                                        const FrequencyOptions& options = {});

/// Maps angles to a vector of length `norm` in a frame whose x-axis is `pole`:
/// (lat, lon) = (0, 0) gives `pole` itself.
Vec3 gravity_from_angles(const Vec3& pole, double norm, double lat, double lon);

}  // namespace imuscale
