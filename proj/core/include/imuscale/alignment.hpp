#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imuscale/types.hpp"

namespace imuscale {

/// Closed-form solution of min sum ||target - (R source + b)||^2.
struct RotationBiasFit {
  Mat3 rotation = Mat3::Identity();
  Vec3 bias = Vec3::Zero();
  double rms_residual = 0.0;
  Vec3 singular_values = Vec3::Zero();
  // Set when the two smallest singular values of the cross-covariance fall
  // below 1e-12 of the largest: the rotation about the data axis is unobservable.
  bool degenerate = false;
};

RotationBiasFit fit_rotation_bias(std::span<const Vec3> source, std::span<const Vec3> target);

struct GoldenSectionResult {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Golden-section minimization on [lo, hi]; stops once the bracket is narrower
/// than `tol`. Assumes a unimodal objective.
GoldenSectionResult golden_section_minimize(const std::function<double(double)>& f, double lo,
                                            double hi, double tol);

/// Expected iteration count of golden_section_minimize for a bracket of `width`.
int golden_section_iterations(double width, double tol);

/// Lag (seconds) maximizing the normalized cross-correlation of the mean-removed
/// series, searched on integer sample lags within +-max_lag. Positive lag means
/// speed_imu(t + lag) matches speed_vis(t).
double coarse_offset(const ScalarSeries& speed_vis, const ScalarSeries& speed_imu, double max_lag);

struct AlignOptions {
  double search_halfwidth = 0.5;  // s, around the coarse estimate
  double max_coarse_lag = 1.0;    // s
  double tolerance = 1e-4;        // s, final bracket width
  double prefilter = 0.1;         // s, centered moving average on both streams; 0 disables
  std::optional<double> initial_offset;  // skips the coarse stage when set
};

struct AlignmentResult {
  Mat3 sensor_to_camera = Mat3::Identity();  // R_S
  Vec3 gyro_bias = Vec3::Zero();             // b^w_C
  double time_offset = 0.0;                  // t_d
  double rms_residual = 0.0;
  int iterations = 0;
  double coarse_offset = 0.0;
  double search_lo = 0.0;
  double search_hi = 0.0;
  std::size_t samples_used = 0;
  bool degenerate = false;
  bool at_boundary = false;
  std::vector<std::string> warnings;
};

/// Joint temporal and spatial alignment of IMU and visual angular velocities.
/// Each golden-section probe shifts omega_imu by t_d (linear interpolation)
/// and solves the rotation/bias fit in closed form; the rms residual is the
/// objective. Both series must share the same rate.
AlignmentResult align(const Vec3Series& omega_imu, const Vec3Series& omega_vis,
                      const AlignOptions& options = {});

ScalarSeries magnitudes(const Vec3Series& series);

/// Centered moving average over `window` seconds (rounded to an odd sample
/// count). The output drops the half-window at each end where the average
/// would be one-sided.
Vec3Series moving_average(const Vec3Series& series, double window);

}  // namespace imuscale
