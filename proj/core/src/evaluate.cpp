#include "imuscale/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "imuscale/alignment.hpp"

namespace imuscale {

FitResult rigid_fit(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size()) throw std::invalid_argument("rigid_fit: length mismatch");
  if (source.size() < 3) throw std::invalid_argument("rigid_fit: need at least 3 points");

  const auto fit = fit_rotation_bias(source, target);
  FitResult out;
  out.rotation = fit.rotation;
  out.translation = fit.bias;
  out.rmse = fit.rms_residual;
  out.degenerate = fit.degenerate;
  return out;
}

double similarity_scale(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size() || source.size() < 2) {
    throw std::invalid_argument("similarity_scale: need matching sets of at least 2 points");
  }
  Vec3 ms = Vec3::Zero();
  Vec3 mt = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    ms += source[i];
    mt += target[i];
  }
  ms /= static_cast<double>(source.size());
  mt /= static_cast<double>(source.size());
  double ss = 0.0;
  double st = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    ss += (source[i] - ms).squaredNorm();
    st += (target[i] - mt).squaredNorm();
  }
  if (!(ss > 0.0)) throw std::invalid_argument("similarity_scale: source points coincide");
  return std::sqrt(st / ss);
}

std::vector<double> cumulative_path_length(std::span<const Vec3> positions, double scale) {
  std::vector<double> out(positions.size(), 0.0);
  for (std::size_t k = 1; k < positions.size(); ++k) {
    out[k] = out[k - 1] + scale * (positions[k] - positions[k - 1]).norm();
  }
  return out;
}

ConvergenceCurve convergence_curve(std::span<const PoseSample> poses, std::span<const ImuSample> imu,
                                   std::span<const double> checkpoints, double truth_scale,
                                   const PipelineOptions& options) {
  if (!(truth_scale > 0.0)) throw Error(Stage::Evaluation, "truth scale must be positive");
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (!(checkpoints[i] > checkpoints[i - 1])) {
      throw Error(Stage::Evaluation, "checkpoints must be strictly ascending");
    }
  }
  if (poses.size() < kMinTrajectorySamples || imu.size() < 2) {
    throw Error(Stage::Evaluation, "not enough data for a convergence curve");
  }

  const double rate =
      options.rate > 0.0 ? options.rate : nominal_rate(std::span<const ImuSample>(imu));
  const auto smoothed = smooth_camera_positions(poses, rate, options);
  const auto travelled = cumulative_path_length(smoothed.position, truth_scale);
  const double margin = imu_margin(options, rate);

  ConvergenceCurve curve;
  for (double d : checkpoints) {
    std::ostringstream notice;
    if (!(d > 0.0)) {
      notice << "checkpoint " << d << " m omitted: must be positive";
      curve.notices.push_back(notice.str());
      continue;
    }
    auto reached = std::find_if(travelled.begin(), travelled.end(), [&](double v) { return v >= d; });
    if (reached == travelled.end()) {
      notice << "checkpoint " << d << " m omitted: total path is only " << travelled.back() << " m";
      curve.notices.push_back(notice.str());
      continue;
    }
    const double t_cut = smoothed.base.time(static_cast<std::size_t>(reached - travelled.begin()));

    // Keep poses up to the first one at or after t_cut so the prefix grid reaches it.
    auto end = std::find_if(poses.begin(), poses.end(),
                            [&](const PoseSample& p) { return p.t >= t_cut - 1e-9; });
    if (end != poses.end()) ++end;
    const std::vector<PoseSample> pose_prefix(poses.begin(), end);
    // The pipeline ignores IMU data beyond the camera span plus its margin, so
    // cutting there leaves a full-length prefix identical to the full run.
    const double imu_cut = pose_prefix.back().t + margin;
    std::vector<ImuSample> imu_prefix;
    for (const auto& s : imu) {
      if (s.t <= imu_cut) imu_prefix.push_back(s);
    }

    try {
      const auto run = estimate(pose_prefix, imu_prefix, options);
      const double s = run.solution.scale;
      curve.points.push_back({d, std::abs(s - truth_scale) / truth_scale * 100.0, s});
    } catch (const Error& e) {
      notice << "checkpoint " << d << " m omitted: " << e.what();
      curve.notices.push_back(notice.str());
    }
  }
  return curve;
}

void write_curve_csv(std::ostream& out, const ConvergenceCurve& curve) {
  out << "distance_m,error_percent\n";
  char buf[64];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.distance_traveled, p.scale_error_percent);
    out << buf;
  }
}

}  // namespace imuscale
