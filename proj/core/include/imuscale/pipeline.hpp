#pragma once

#include <span>
#include <string>
#include <vector>

#include "imuscale/alignment.hpp"
#include "imuscale/ingest.hpp"
#include "imuscale/scale.hpp"
#include "imuscale/smoother.hpp"
#include "imuscale/spectrum.hpp"

namespace imuscale {

struct PipelineOptions {
  double rate = 0.0;  // common grid rate in Hz; 0 selects the IMU's nominal rate
  AlignOptions align;
  SmootherConfig smoother;
  bool smoothing = true;        // false: raw double differences of the upsampled positions
  bool frequency_stage = true;  // false: report the time-domain solution
  FrequencyOptions frequency;
  Window window = Window::Rectangular;
};

struct StageTimings {
  double resample_ms = 0.0;
  double alignment_ms = 0.0;
  double smoothing_ms = 0.0;
  double time_domain_ms = 0.0;
  double frequency_domain_ms = 0.0;
  double total_ms = 0.0;
};

struct PipelineResult {
  ScaleSolution solution;     // final (frequency-domain unless disabled)
  ScaleSolution time_domain;  // closed-form initialization
  AlignmentResult alignment;
  double process_noise = 0.0;
  double measurement_variance = 0.0;
  double clock_origin = 0.0;  // subtracted from both streams
  double rate = 0.0;
  std::size_t samples_used = 0;  // grid samples entering the scale stage
  Vec3Series smoothed_positions;  // full grid, reconstruction units
  std::vector<std::string> warnings;
  StageTimings timings;
};

/// Time margin of IMU data kept around the camera span. Anything outside it
/// cannot influence the estimate.
double imu_margin(const PipelineOptions& options, double rate);

struct AlignmentOnly {
  AlignmentResult alignment;
  double rate = 0.0;
  double clock_origin = 0.0;
  std::vector<std::string> warnings;
  double alignment_ms = 0.0;
};

/// The front half of estimate(): clock shift, upsampling and camera-IMU
/// alignment, without smoothing or scale estimation.
AlignmentOnly align_streams(std::span<const PoseSample> poses, std::span<const ImuSample> imu,
                            const PipelineOptions& options = {});

/// Upsample -> visual angular velocity -> alignment -> rotate IMU into the
/// camera frame -> RTS smoothing -> time-domain init -> frequency-domain
/// refinement. Failures are thrown as Error tagged with their stage.
PipelineResult estimate(std::span<const PoseSample> poses, std::span<const ImuSample> imu,
                        const PipelineOptions& options = {});

/// Smoothed camera positions on a uniform grid at `rate`, using the same
/// measurement-noise rule as estimate().
StateTrajectory smooth_camera_positions(std::span<const PoseSample> poses, double rate,
                                        const PipelineOptions& options = {});

}  // namespace imuscale
