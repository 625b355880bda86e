#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "imuscale/alignment.hpp"
#include "imuscale/ingest.hpp"
#include "imuscale/kinematics.hpp"
#include "imuscale/oracle.hpp"
#include "test_support.hpp"

using namespace imuscale;
using namespace imuscale::testing;

namespace {

Vec3List random_cloud(std::mt19937_64& rng, int n, double sigma = 1.0) {
  Vec3List v;
  for (int k = 0; k < n; ++k) v.push_back(random_vector(rng, sigma));
  return v;
}

// Smooth multi-axis angular velocity on a uniform grid.
Vec3 wiggle(double t) {
  return Vec3(0.6 * std::sin(1.3 * t) + 0.2 * std::sin(4.1 * t + 1.0),
              0.5 * std::cos(0.9 * t + 0.3) + 0.15 * std::sin(3.3 * t),
              0.4 * std::sin(1.7 * t + 2.0) + 0.1 * std::cos(5.2 * t));
}

Vec3Series sample_series(double t0, double rate, std::size_t n, auto&& f) {
  Vec3Series s{{t0, rate, n}, {}};
  for (std::size_t k = 0; k < n; ++k) s.values.push_back(f(s.base.time(k)));
  return s;
}

// Brute-force lag scan used as the oracle for coarse_offset.
int exhaustive_best_lag(const std::vector<double>& vis, const std::vector<double>& imu, int max_lag) {
  int best = 0;
  double best_corr = -2.0;
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    std::vector<double> x, y;
    for (int k = 0; k < static_cast<int>(vis.size()); ++k) {
      const int j = k + lag;
      if (j < 0 || j >= static_cast<int>(imu.size())) continue;
      x.push_back(vis[k]);
      y.push_back(imu[j]);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    const double c = sxy / std::sqrt(sxx * syy);
    if (c > best_corr) {
      best_corr = c;
      best = lag;
    }
  }
  return best;
}

}  // namespace

TEST(FitRotationBias, IdenticalInputs) {
  std::mt19937_64 rng(1);
  const auto w = random_cloud(rng, 50);
  const auto fit = fit_rotation_bias(w, w);
  EXPECT_LT((fit.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(fit.bias.norm(), 1e-12);
  EXPECT_LT(fit.rms_residual, 1e-12);
  EXPECT_FALSE(fit.degenerate);
}

TEST(FitRotationBias, PureBias) {
  std::mt19937_64 rng(2);
  const auto w = random_cloud(rng, 50);
  const Vec3 b(0.01, -0.02, 0.005);
  Vec3List target;
  for (const auto& v : w) target.push_back(v + b);
  const auto fit = fit_rotation_bias(w, target);
  EXPECT_LT((fit.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT((fit.bias - b).norm(), 1e-12);
}

TEST(FitRotationBias, QuarterTurnAboutZ) {
  std::mt19937_64 rng(3);
  const Mat3 r0 = axis_angle(Vec3::UnitZ(), std::numbers::pi / 2);
  ASSERT_LT((r0 * Vec3::UnitX() - Vec3::UnitY()).norm(), 1e-15);
  const auto w = random_cloud(rng, 40);
  Vec3List target;
  for (const auto& v : w) target.push_back(r0 * v);
  const auto fit = fit_rotation_bias(w, target);
  EXPECT_LT((fit.rotation - r0).norm(), 1e-10);
}

TEST(FitRotationBias, ExactOnConstructedRigidMotion) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat3 r0 = random_rotation(rng);
    const Vec3 b0 = random_vector(rng, 0.1);
    const auto w = random_cloud(rng, 30);
    Vec3List target;
    for (const auto& v : w) target.push_back(r0 * v + b0);
    const auto fit = fit_rotation_bias(w, target);
    EXPECT_LT((fit.rotation - r0).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((fit.bias - b0).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FitRotationBias, NoisyRecoveryWithinTwentiethOfDegree) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 r0 = random_rotation(rng);
    const Vec3 b0 = random_vector(rng, 0.05);
    const auto w = random_cloud(rng, 500);
    Vec3List target;
    for (const auto& v : w) target.push_back(r0 * v + b0 + random_vector(rng, 1e-3));
    const auto fit = fit_rotation_bias(w, target);
    EXPECT_LT(deg(rotation_angle_between(fit.rotation, r0)), 0.05);
  }
}

TEST(FitRotationBias, FlagsCollinearInput) {
  Vec3List w;
  for (int k = 0; k < 20; ++k) w.push_back(Vec3(1, 2, 3) * std::sin(0.3 * k));
  const auto fit = fit_rotation_bias(w, w);
  EXPECT_TRUE(fit.degenerate);
}

TEST(FitRotationBias, NeverWorseThanIdentityAndAlwaysProper) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto src = random_cloud(rng, 10);
    Vec3List tgt;
    // Mirror image plus noise: the unconstrained optimum would be a reflection.
    for (const auto& v : src) tgt.push_back(Vec3(-v.x(), v.y(), v.z()) + random_vector(rng, 0.3));
    const auto fit = fit_rotation_bias(src, tgt);
    EXPECT_NEAR(fit.rotation.determinant(), 1.0, 1e-12);
    double identity_sq = 0.0;
    for (std::size_t k = 0; k < src.size(); ++k) identity_sq += (tgt[k] - src[k]).squaredNorm();
    EXPECT_LE(fit.rms_residual, std::sqrt(identity_sq / src.size()) + 1e-12);
  }
}

TEST(GoldenSection, MinimizesQuadraticWithPredictedIterations) {
  int calls = 0;
  const auto res = golden_section_minimize(
      [&](double x) {
        ++calls;
        return (x - 0.123) * (x - 0.123);
      },
      -1.0, 1.0, 1e-6);
  EXPECT_NEAR(res.x, 0.123, 1e-6);
  EXPECT_LT(res.hi - res.lo, 1e-6);
  EXPECT_EQ(res.iterations, golden_section_iterations(2.0, 1e-6));
  EXPECT_EQ(res.iterations, static_cast<int>(std::ceil(std::log(2.0 / 1e-6) / std::log(1.618033988749895))));
  EXPECT_EQ(calls, res.iterations + 3);
}

TEST(GoldenSection, BracketShrinksByGoldenRatio) {
  for (double width : {0.01, 0.5, 1.0, 7.0}) {
    const auto res = golden_section_minimize([](double x) { return std::abs(x); }, -width / 3, 2 * width / 3, 1e-4);
    EXPECT_EQ(res.iterations, golden_section_iterations(width, 1e-4));
    EXPECT_LE(res.hi - res.lo, 1e-4);
    EXPECT_GT((res.hi - res.lo) * std::numbers::phi, 1e-4 * (1 - 1e-9));
  }
}

TEST(CoarseOffset, IdenticalSeriesGiveZero) {
  const auto s = magnitudes(sample_series(0.0, 100.0, 2000, wiggle));
  EXPECT_EQ(coarse_offset(s, s, 1.0), 0.0);
}

TEST(CoarseOffset, ConstructedShiftOfFifteenSamples) {
  const auto vis = magnitudes(sample_series(0.0, 100.0, 2000, wiggle));
  // imu(t + 0.15) = vis(t)
  const auto imu = magnitudes(sample_series(-1.0, 100.0, 2200, [](double t) { return wiggle(t - 0.15); }));
  EXPECT_NEAR(coarse_offset(vis, imu, 1.0), 0.15, 1e-12);
}

TEST(CoarseOffset, NoisyShiftMatchesExhaustiveScan) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto vis = magnitudes(sample_series(0.0, 100.0, 3000, wiggle));
    auto imu = magnitudes(sample_series(0.0, 100.0, 3000, [](double t) { return wiggle(t - 0.15); }));
    double rms = 0.0;
    for (double v : imu.values) rms += v * v;
    rms = std::sqrt(rms / imu.values.size());
    std::normal_distribution<double> noise(0.0, 0.1 * rms);
    for (double& v : imu.values) v += noise(rng);

    const double lag = coarse_offset(vis, imu, 1.0);
    const int oracle = exhaustive_best_lag(vis.values, imu.values, 100);
    EXPECT_NEAR(lag * 100.0, oracle, 1e-9);
    EXPECT_LE(std::abs(lag - 0.15), 0.01 + 1e-12);
  }
}

TEST(CoarseOffset, FlatSignalsCannotAlign) {
  Vec3Series flat = sample_series(0.0, 100.0, 500, [](double) { return Vec3(0.0, 0.0, 0.2); });
  EXPECT_THROW(coarse_offset(magnitudes(flat), magnitudes(flat), 1.0), Error);
}

TEST(CoarseOffset, RejectsLagBeyondHalfOverlap) {
  const auto s = magnitudes(sample_series(0.0, 100.0, 300, wiggle));
  EXPECT_THROW(coarse_offset(s, s, 2.0), std::invalid_argument);
}

TEST(MovingAverage, PreservesLinearSignalsAndTrimsEnds) {
  const auto s = sample_series(1.0, 100.0, 500, [](double t) { return Vec3(2.0, 3.0 * t, -t + 4.0); });
  const auto f = moving_average(s, 0.1);
  EXPECT_EQ(f.base.size, 490u);
  EXPECT_DOUBLE_EQ(f.base.t0, 1.05);
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    EXPECT_LT((f.values[k] - s.values[k + 5]).norm(), 1e-12);
  }
  EXPECT_EQ(moving_average(s, 0.0).values, s.values);
}

TEST(Align, IdenticalStreams) {
  const auto w = sample_series(0.0, 100.0, 2000, wiggle);
  const auto res = align(w, w);
  EXPECT_NEAR(res.time_offset, 0.0, 1e-4);
  EXPECT_LT((res.sensor_to_camera - Mat3::Identity()).norm(), 1e-4);
  EXPECT_FALSE(res.at_boundary);
  EXPECT_EQ(res.iterations, golden_section_iterations(1.0, 1e-4));
}

TEST(Align, SimulatorRecoversOffsetAndRotation) {
  ScenarioSpec spec = default_scenario();
  spec.noise = {};
  spec.truth.gyro_bias = Vec3::Zero();
  spec.truth.sensor_to_camera = axis_angle(Vec3::UnitX(), std::numbers::pi / 2);
  spec.truth.time_offset = 0.15;
  spec.duration = 30.0;
  const auto data = generate(spec, 0);
  const Trajectory traj(spec);

  const double rate = 100.0;
  const auto omega_vis = sample_series(0.0, rate, 2900, [&](double t) { return traj.body_rate(t); });
  const auto imu = resample_imu(data.imu, TimeBase{0.0, rate, data.imu.size()});
  const auto res = align({imu.base, imu.gyro}, omega_vis);
  EXPECT_NEAR(res.time_offset, 0.15, 2e-3);
  EXPECT_LT(deg(rotation_angle_between(res.sensor_to_camera, spec.truth.sensor_to_camera)), 0.1);
}

TEST(Align, OffsetOutsideWindowWarnsAtBoundary) {
  const auto vis = sample_series(0.0, 100.0, 2000, wiggle);
  const auto imu = sample_series(-2.0, 100.0, 2500, [](double t) { return wiggle(t - 0.6); });
  AlignOptions opts;
  opts.initial_offset = 0.0;
  opts.search_halfwidth = 0.5;
  const auto res = align(imu, vis, opts);
  EXPECT_TRUE(res.at_boundary);
  EXPECT_NEAR(res.time_offset, 0.5, 1e-3);
  ASSERT_FALSE(res.warnings.empty());
  EXPECT_NE(res.warnings.back().find("boundary"), std::string::npos);
}

TEST(Align, EquivariantUnderPreRotation) {
  std::mt19937_64 rng(12);
  const Mat3 rs = random_rotation(rng);
  const Vec3 bias(0.02, -0.01, 0.03);
  const auto vis = sample_series(0.0, 100.0, 2000, wiggle);
  const auto imu = sample_series(-1.0, 100.0, 2200, [&](double t) {
    return Vec3(rs.transpose() * (wiggle(t - 0.237) - bias));
  });
  const auto base = align(imu, vis);
  EXPECT_NEAR(base.time_offset, 0.237, 1e-3);

  for (int trial = 0; trial < 3; ++trial) {
    const Mat3 q = random_rotation(rng);
    Vec3Series rotated = imu;
    for (auto& v : rotated.values) v = q * v;
    const auto res = align(rotated, vis);
    EXPECT_NEAR(res.time_offset, base.time_offset, 1e-9);
    EXPECT_NEAR(res.rms_residual, base.rms_residual, 1e-9);
    EXPECT_LT((res.sensor_to_camera - base.sensor_to_camera * q.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  }
}
