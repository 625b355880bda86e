#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "imuscale/pipeline.hpp"

namespace imuscale {

struct FitResult {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double rmse = 0.0;  // sqrt(mean ||R src + t - tgt||^2)
  bool degenerate = false;
};

/// Least-squares rigid motion mapping `source` onto `target` (SVD of the
/// cross-covariance with reflection guard). Flags collinear configurations.
FitResult rigid_fit(std::span<const Vec3> source, std::span<const Vec3> target);

/// Scale of the similarity transform between corresponding point sets:
/// sqrt(sum ||tgt - mean||^2 / sum ||src - mean||^2).
double similarity_scale(std::span<const Vec3> source, std::span<const Vec3> target);

struct ConvergencePoint {
  double distance_traveled = 0.0;  // m
  double scale_error_percent = 0.0;
  double scale = 0.0;
};

struct ConvergenceCurve {
  std::vector<ConvergencePoint> points;
  std::vector<std::string> notices;
};

/// Cumulative path length of `positions` multiplied by `scale`, one entry per sample.
std::vector<double> cumulative_path_length(std::span<const Vec3> positions, double scale);

/// Reruns the full pipeline on prefixes of the recording that end where the
/// truth-scaled smoothed path first reaches each checkpoint (metres).
ConvergenceCurve convergence_curve(std::span<const PoseSample> poses, std::span<const ImuSample> imu,
                                   std::span<const double> checkpoints, double truth_scale,
                                   const PipelineOptions& options = {});

/// "distance_m,error_percent" rows.
void write_curve_csv(std::ostream& out, const ConvergenceCurve& curve);

}  // namespace imuscale
