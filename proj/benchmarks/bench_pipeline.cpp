#include <vector>

#include <benchmark/benchmark.h>

#include "imuscale/alignment.hpp"
#include "imuscale/kinematics.hpp"
#include "imuscale/oracle.hpp"
#include "imuscale/pipeline.hpp"
#include "imuscale/smoother.hpp"
#include "imuscale/spectrum.hpp"

using namespace imuscale;

namespace {

const SimulatedData& dataset() {
  static const SimulatedData data = generate(default_scenario(), 1);
  return data;
}

void BM_Estimate(benchmark::State& state) {
  auto spec = default_scenario();
  spec.duration = static_cast<double>(state.range(0));
  const auto data = generate(spec, 1);
  for (auto _ : state) benchmark::DoNotOptimize(estimate(data.camera_poses, data.imu));
  state.SetLabel(std::to_string(data.imu.size()) + " IMU samples");
}
BENCHMARK(BM_Estimate)->Arg(15)->Arg(30)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_KalmanForward(benchmark::State& state) {
  std::vector<double> z(static_cast<std::size_t>(state.range(0)));
  const auto& poses = dataset().camera_poses;
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = poses[k % poses.size()].position.x();
  for (auto _ : state) benchmark::DoNotOptimize(kalman_forward(z, 0.01, 1.0, 1e-6));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KalmanForward)->Arg(1000)->Arg(6000)->Arg(24000);

void BM_SmoothFrames(benchmark::State& state) {
  const auto& poses = dataset().camera_poses;
  std::vector<double> times;
  Vec3List positions;
  for (const auto& p : poses) {
    times.push_back(p.t);
    positions.push_back(p.position);
  }
  const TimeBase grid{times.front(), 100.0,
                      static_cast<std::size_t>((times.back() - times.front()) * 100.0) + 1};
  for (auto _ : state) benchmark::DoNotOptimize(smooth_samples(times, positions, grid));
}
BENCHMARK(BM_SmoothFrames)->Unit(benchmark::kMillisecond);

void BM_Align(benchmark::State& state) {
  const auto& data = dataset();
  const auto grid = resample_poses(data.camera_poses, 100.0);
  const Vec3Series vis{grid.base, camera_body_rate(to_rotation_matrices(grid.orientations), 100.0)};
  Vec3Series imu{{data.imu.front().t, 100.0, data.imu.size()}, {}};
  for (const auto& s : data.imu) imu.values.push_back(s.gyro);
  for (auto _ : state) benchmark::DoNotOptimize(align(imu, vis));
}
BENCHMARK(BM_Align)->Unit(benchmark::kMillisecond);

void BM_AmplitudeSpectra(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Vec3List a_vis(n), a_imu(n);
  std::vector<Mat3> rot(n, Mat3::Identity());
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / 100.0;
    a_vis[k] = Vec3(std::sin(t), std::cos(2.0 * t), std::sin(3.0 * t));
    a_imu[k] = 0.37 * a_vis[k];
  }
  for (auto _ : state) benchmark::DoNotOptimize(amplitude_spectra(a_vis, a_imu, rot, 100.0));
}
BENCHMARK(BM_AmplitudeSpectra)->Arg(1500)->Arg(6000)->Arg(24000);

}  // namespace

BENCHMARK_MAIN();
