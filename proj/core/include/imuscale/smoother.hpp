#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imuscale/types.hpp"

namespace imuscale {

// Per-axis white-noise-jerk model: state (position, velocity, acceleration).
using KalmanState = Eigen::Vector3d;
using KalmanCov = Eigen::Matrix3d;

std::vector<double> log_spaced_grid(double lo, double hi, int count);

struct SmootherConfig {
  std::vector<double> q_grid = log_spaced_grid(1e-4, 1e4, 17);
  std::optional<double> measurement_variance;  // estimated from the data when unset
};

Eigen::Matrix3d jerk_transition(double dt);
Eigen::Matrix3d jerk_process_covariance(double dt, double q);

/// Var(p[k] - (p[k-1] + p[k+1]) / 2) * 2/3, averaged over axes. Equals the
/// white measurement-noise variance when the signal itself is smooth.
double estimate_measurement_variance(std::span<const Vec3> positions);

struct ForwardPass {
  std::vector<double> steps;  // time since the previous sample; 0 for the first
  double q = 0.0;
  double r = 0.0;
  std::vector<KalmanState> predicted_mean;
  std::vector<KalmanCov> predicted_cov;
  std::vector<KalmanState> filtered_mean;
  std::vector<KalmanCov> filtered_cov;
  std::vector<double> innovation;
  std::vector<double> innovation_variance;
  double log_likelihood = 0.0;
};

/// Kalman filter over scalar position measurements. The first measurement
/// seeds the position with a diffuse 1e6 * r prior on every state. The log
/// marginal likelihood comes from the prediction error decomposition.
ForwardPass kalman_forward(std::span<const double> measurements, double dt, double q, double r);

/// Same filter on nondecreasing sample times. A NaN measurement marks a
/// prediction-only sample: it gets a state but adds nothing to the
/// likelihood, and its innovation is stored as NaN. The first finite
/// measurement seeds the prior.
ForwardPass kalman_forward(std::span<const double> times, std::span<const double> measurements,
                           double q, double r);

struct AxisSmoothing {
  std::vector<KalmanState> mean;
  std::vector<KalmanCov> cov;
};

/// Rauch-Tung-Striebel backward pass over stored forward results.
AxisSmoothing rts_backward(const ForwardPass& forward);

struct NoiseSelection {
  double q = 0.0;
  std::size_t index = 0;
  std::vector<double> log_likelihood;  // summed over axes, one per grid point
  bool at_boundary = false;
};

/// Picks the grid q maximizing the summed per-axis log marginal likelihood.
/// Ties go to the smaller q.
NoiseSelection select_process_noise(std::span<const Vec3> positions, double dt, double r,
                                    std::span<const double> q_grid);
NoiseSelection select_process_noise(std::span<const double> times, std::span<const Vec3> positions,
                                    double r, std::span<const double> q_grid);

struct StateTrajectory {
  TimeBase base;
  Vec3List position;
  Vec3List velocity;
  Vec3List acceleration;
  std::array<std::vector<KalmanCov>, 3> covariance;  // per axis
  double q = 0.0;
  double r = 0.0;
  std::vector<double> log_likelihood;
  std::vector<std::string> warnings;
};

StateTrajectory smooth_positions(const Vec3Series& positions, const SmootherConfig& config = {});

/// Smooths position samples taken at arbitrary increasing times and reports
/// the states on `grid`. Grid points between samples come from the model's
/// own prediction rather than from interpolated pseudo-measurements, so
/// upsampling adds no bias. Grid points outside the sample span are
/// extrapolated.
StateTrajectory smooth_samples(std::span<const double> times, std::span<const Vec3> positions,
                               const TimeBase& grid, const SmootherConfig& config = {});

/// Second central difference of a uniform position series (one-sided at ends).
Vec3List double_difference(const Vec3Series& positions);

}  // namespace imuscale
