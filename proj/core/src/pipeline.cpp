#include "imuscale/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "imuscale/kinematics.hpp"

namespace imuscale {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

template <typename F>
auto run_stage(Stage stage, F&& body) {
  try {
    return body();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(stage, e.what());
  }
}

// Smoothing runs on the frames themselves; the grid only selects where the
// states are reported.
StateTrajectory smooth_frames(std::span<const PoseSample> poses, const TimeBase& grid,
                              const PipelineOptions& options) {
  std::vector<double> times;
  Vec3List positions;
  times.reserve(poses.size());
  positions.reserve(poses.size());
  for (const auto& p : poses) {
    times.push_back(p.t);
    positions.push_back(p.position);
  }
  return smooth_samples(times, positions, grid, options.smoother);
}

}  // namespace

double imu_margin(const PipelineOptions& options, double rate) {
  double lag = options.align.max_coarse_lag;
  if (options.align.initial_offset) lag = std::abs(*options.align.initial_offset);
  return lag + options.align.search_halfwidth + 2.0 / rate;
}

StateTrajectory smooth_camera_positions(std::span<const PoseSample> poses, double rate,
                                        const PipelineOptions& options) {
  const auto grid = resample_poses(poses, rate);
  return smooth_frames(poses, grid.base, options);
}

namespace {

struct Prepared {
  double rate = 0.0;
  double clock_origin = 0.0;
  std::vector<PoseSample> poses;
  std::vector<ImuSample> imu;
  PoseSeries grid;
  RotationSequence rotations;
  AlignmentResult alignment;
  std::vector<std::string> warnings;
  double resample_ms = 0.0;
  double alignment_ms = 0.0;
};

// Clock shift, upsampling, IMU trimming and temporal/spatial alignment.
Prepared prepare_and_align(std::span<const PoseSample> poses_in, std::span<const ImuSample> imu_in,
                           const PipelineOptions& options) {
  Prepared out;
  auto& poses = out.poses;
  auto& imu = out.imu;
  poses.assign(poses_in.begin(), poses_in.end());
  imu.assign(imu_in.begin(), imu_in.end());

  auto stage_start = Clock::now();
  const double rate = run_stage(Stage::Ingest, [&] {
    if (poses.size() < kMinTrajectorySamples) {
      throw Error(Stage::Ingest, "need at least " + std::to_string(kMinTrajectorySamples) + " poses");
    }
    if (imu.size() < 2) throw Error(Stage::Ingest, "need at least 2 IMU samples");
    return options.rate > 0.0 ? options.rate : nominal_rate(std::span<const ImuSample>(imu));
  });
  out.rate = rate;
  out.clock_origin = shift_clock_origin(poses, imu);

  out.grid = run_stage(Stage::Ingest, [&] { return resample_poses(poses, rate, &out.warnings); });
  const PoseSeries& grid = out.grid;

  // Drop IMU data that no alignment probe can reach.
  const double margin = imu_margin(options, rate);
  std::erase_if(imu, [&](const ImuSample& s) {
    return s.t < grid.base.t0 - margin || s.t > grid.base.last() + margin;
  });
  if (imu.size() < 2) {
    throw Error(Stage::Ingest, "IMU data does not overlap the camera sequence",
                "check that both files come from the same recording");
  }

  out.rotations = to_rotation_matrices(grid.orientations);
  const ImuSeries imu_grid = run_stage(Stage::Ingest, [&] {
    const auto k_first = static_cast<long>(std::ceil(imu.front().t * rate - 1e-9));
    const auto k_last = static_cast<long>(std::floor(imu.back().t * rate + 1e-9));
    if (k_last - k_first < 3) throw Error(Stage::Ingest, "IMU span shorter than 3 grid samples");
    TimeBase base{grid.base.t0 + static_cast<double>(k_first) / rate, rate,
                  static_cast<std::size_t>(k_last - k_first + 1)};
    return resample_imu(imu, base);
  });
  out.resample_ms = elapsed_ms(stage_start);

  stage_start = Clock::now();
  out.alignment = run_stage(Stage::Alignment, [&] {
    Vec3Series omega_vis{grid.base, camera_body_rate(out.rotations, rate)};
    Vec3Series omega_imu{imu_grid.base, imu_grid.gyro};
    AlignOptions align_options = options.align;
    const double overlap = std::min(omega_imu.base.last(), omega_vis.base.last()) -
                           std::max(omega_imu.base.t0, omega_vis.base.t0);
    if (!align_options.initial_offset && align_options.max_coarse_lag >= 0.5 * overlap) {
      align_options.max_coarse_lag = 0.45 * overlap;
      std::ostringstream os;
      os << "coarse lag search limited to " << align_options.max_coarse_lag
         << " s by the short overlap";
      out.warnings.push_back(os.str());
    }
    return align(omega_imu, omega_vis, align_options);
  });
  for (const auto& w : out.alignment.warnings) out.warnings.push_back(w);
  out.alignment_ms = elapsed_ms(stage_start);
  return out;
}

}  // namespace

AlignmentOnly align_streams(std::span<const PoseSample> poses, std::span<const ImuSample> imu,
                            const PipelineOptions& options) {
  auto prepared = prepare_and_align(poses, imu, options);
  AlignmentOnly out;
  out.alignment = std::move(prepared.alignment);
  out.rate = prepared.rate;
  out.clock_origin = prepared.clock_origin;
  out.warnings = std::move(prepared.warnings);
  out.alignment_ms = prepared.alignment_ms;
  return out;
}

PipelineResult estimate(std::span<const PoseSample> poses_in, std::span<const ImuSample> imu_in,
                        const PipelineOptions& options) {
  const auto start = Clock::now();
  PipelineResult result;
  auto prepared = prepare_and_align(poses_in, imu_in, options);
  const double rate = prepared.rate;
  const auto& poses = prepared.poses;
  const auto& imu = prepared.imu;
  const PoseSeries& grid = prepared.grid;
  const RotationSequence& rotations = prepared.rotations;
  result.rate = rate;
  result.clock_origin = prepared.clock_origin;
  result.alignment = std::move(prepared.alignment);
  result.warnings = std::move(prepared.warnings);
  result.timings.resample_ms = prepared.resample_ms;
  result.timings.alignment_ms = prepared.alignment_ms;
  auto stage_start = Clock::now();

  const double td = result.alignment.time_offset;
  std::size_t k0 = 0;
  std::size_t k1 = 0;
  const Vec3List a_imu_camera = run_stage(Stage::Alignment, [&] {
    const double first = imu.front().t;
    const double last = imu.back().t;
    bool found = false;
    for (std::size_t k = 0; k < grid.base.size; ++k) {
      const double t = grid.base.time(k) + td;
      if (t >= first && t <= last) {
        if (!found) k0 = k;
        found = true;
        k1 = k;
      }
    }
    if (!found || k1 - k0 < 7) {
      throw Error(Stage::Alignment, "no IMU coverage of the camera sequence after the time offset");
    }
    TimeBase shifted{grid.base.time(k0) + td, rate, k1 - k0 + 1};
    const auto sensor = resample_imu(imu, shifted);
    return rotate_sensor_to_camera(result.alignment.sensor_to_camera, sensor.accel);
  });
  result.samples_used = k1 - k0 + 1;

  stage_start = Clock::now();
  const Vec3List a_vis_world = run_stage(Stage::Smoothing, [&] {
    const Vec3Series positions{grid.base, grid.positions};
    if (!options.smoothing) {
      result.smoothed_positions = positions;
      return double_difference(positions);
    }
    auto smoothed = smooth_frames(poses, grid.base, options);
    result.process_noise = smoothed.q;
    result.measurement_variance = smoothed.r;
    for (const auto& w : smoothed.warnings) result.warnings.push_back(w);
    result.smoothed_positions = {grid.base, std::move(smoothed.position)};
    return std::move(smoothed.acceleration);
  });
  result.timings.smoothing_ms = elapsed_ms(stage_start);

  const std::span<const Mat3> used_rotations(rotations.data() + k0, k1 - k0 + 1);
  const Vec3List a_vis_camera = rotate_world_to_camera(
      used_rotations, std::span<const Vec3>(a_vis_world.data() + k0, k1 - k0 + 1));

  stage_start = Clock::now();
  result.time_domain = run_stage(Stage::Scale, [&] {
    auto sol = estimate_time_domain(a_vis_camera, a_imu_camera, used_rotations,
                                    ScaleModel::ScaleBiasGravity);
    if (sol.rank_deficient) {
      throw Error(Stage::Scale, sol.warnings.empty() ? "rank-deficient scale problem" : sol.warnings.front(),
                  "the device must rotate during the recording to separate gravity from bias");
    }
    if (!(sol.scale > 0.0)) {
      throw Error(Stage::Scale, "time-domain scale estimate is not positive",
                  "check the camera-IMU alignment and the motion content");
    }
    return sol;
  });
  result.timings.time_domain_ms = elapsed_ms(stage_start);

  stage_start = Clock::now();
  result.solution = run_stage(Stage::Scale, [&] {
    if (!options.frequency_stage) return result.time_domain;
    const auto spectra =
        amplitude_spectra(a_vis_camera, a_imu_camera, used_rotations, rate, options.window);
    return estimate_frequency_domain(spectra, result.time_domain, options.frequency);
  });
  for (const auto& w : result.solution.warnings) result.warnings.push_back(w);
  result.timings.frequency_domain_ms = elapsed_ms(stage_start);
  result.timings.total_ms = elapsed_ms(start);
  return result;
}

}  // namespace imuscale
