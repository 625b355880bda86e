#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "imuscale/oracle.hpp"
#include "imuscale/scale.hpp"
#include "imuscale/spectrum.hpp"
#include "test_support.hpp"

using namespace imuscale;
using namespace imuscale::testing;

namespace {

// Analytic camera-frame accelerations from the closed-form scenario.
struct Stream {
  Vec3List a_vis;
  Vec3List a_imu;
  RotationSequence rotations;
};

Stream analytic_stream(const ScenarioSpec& spec, double rate, double seconds) {
  const Trajectory traj(spec);
  Stream s;
  const auto n = static_cast<std::size_t>(seconds * rate);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = k / rate;
    const Mat3 r = traj.world_to_camera(t);
    s.rotations.push_back(r);
    s.a_vis.push_back(r * traj.acceleration(t) / spec.truth.scale);
    s.a_imu.push_back(r * (traj.acceleration(t) + spec.truth.gravity) + spec.truth.accel_bias);
  }
  return s;
}

Stream constructed(double s_true, const Vec3& g, const Vec3& b, std::size_t n = 2048) {
  ScenarioSpec spec = default_scenario();
  const Trajectory traj(spec);
  Stream out;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = k / 100.0;
    const Mat3 r = traj.world_to_camera(t);
    out.rotations.push_back(r);
    out.a_vis.push_back(r * traj.acceleration(t));
    out.a_imu.push_back(s_true * out.a_vis.back() + b + r * g);
  }
  return out;
}

double angle_deg(const Vec3& a, const Vec3& b) {
  return deg(std::atan2(a.cross(b).norm(), a.dot(b)));
}

double full_energy(const Spectrum& half, std::size_t n_fft) {
  double e = std::norm(half[0]) + std::norm(half[n_fft / 2]);
  for (std::size_t k = 1; k < n_fft / 2; ++k) e += 2.0 * std::norm(half[k]);
  return e;
}

}  // namespace

TEST(TimeDomain, ScaleOnly) {
  std::mt19937_64 rng(1);
  Vec3List v, i;
  for (int k = 0; k < 20; ++k) {
    v.push_back(random_vector(rng));
    i.push_back(2.0 * v.back());
  }
  const auto sol = estimate_time_domain(v, i, {}, ScaleModel::Scale);
  EXPECT_NEAR(sol.scale, 2.0, 1e-14);
  EXPECT_FALSE(sol.rank_deficient);
}

TEST(TimeDomain, ScaleAndBias) {
  std::mt19937_64 rng(2);
  const Vec3 b(0.1, -0.05, 0.2);
  Vec3List v, i;
  for (int k = 0; k < 50; ++k) {
    v.push_back(random_vector(rng));
    i.push_back(0.37 * v.back() + b);
  }
  const auto sol = estimate_time_domain(v, i, {}, ScaleModel::ScaleBias);
  EXPECT_NEAR(sol.scale, 0.37, 1e-13);
  EXPECT_LT((sol.accel_bias - b).norm(), 1e-13);
  EXPECT_LT(sol.objective_time, 1e-24);
}

TEST(TimeDomain, NoiseFreeScenario) {
  ScenarioSpec spec = default_scenario();
  const auto s = analytic_stream(spec, 100.0, 60.0);
  const auto sol = estimate_time_domain(s.a_vis, s.a_imu, s.rotations);
  EXPECT_NEAR(sol.scale / spec.truth.scale, 1.0, 1e-3);
  EXPECT_NEAR(sol.gravity.norm() / 9.81, 1.0, 5e-3);
  EXPECT_LT((sol.accel_bias - spec.truth.accel_bias).norm(), 1e-9);
  EXPECT_LT(std::sqrt(sol.objective_time / (3.0 * s.a_vis.size())), 1e-8);
}

TEST(TimeDomain, ConstantOrientationIsRankDeficient) {
  std::mt19937_64 rng(3);
  const Mat3 r = random_rotation(rng);
  const Vec3 g(0.0, 0.0, 9.81);
  Vec3List v, i;
  RotationSequence rs;
  for (int k = 0; k < 100; ++k) {
    v.push_back(random_vector(rng));
    i.push_back(0.5 * v.back() + r * g);
    rs.push_back(r);
  }
  const auto sol = estimate_time_domain(v, i, rs);
  EXPECT_TRUE(sol.rank_deficient);
  ASSERT_EQ(sol.null_direction.size(), 7u);
  // The ambiguity lives in (b, g): b + R g is all that is observable.
  EXPECT_NEAR(sol.null_direction[0], 0.0, 1e-9);
  const Vec3 nb(sol.null_direction[1], sol.null_direction[2], sol.null_direction[3]);
  const Vec3 ng(sol.null_direction[4], sol.null_direction[5], sol.null_direction[6]);
  EXPECT_LT((nb + r * ng).norm(), 1e-9);
  ASSERT_FALSE(sol.warnings.empty());
}

TEST(TimeDomain, ScaleEquivariance) {
  const auto s = constructed(2.0, Vec3(1.0, -9.0, 3.0), Vec3(0.1, 0.0, -0.1), 600);
  const auto base = estimate_time_domain(s.a_vis, s.a_imu, s.rotations);
  Vec3List scaled;
  for (const auto& a : s.a_vis) scaled.push_back(4.0 * a);
  const auto sol = estimate_time_domain(scaled, s.a_imu, s.rotations);
  EXPECT_NEAR(sol.scale * 4.0, base.scale, 1e-10);
}

TEST(Spectrum, NextPowerOfTwo) {
  EXPECT_EQ(next_power_of_two(1), 1u);
  EXPECT_EQ(next_power_of_two(64), 64u);
  EXPECT_EQ(next_power_of_two(65), 128u);
  EXPECT_EQ(next_power_of_two(6000), 8192u);
}

TEST(Spectrum, ConstantChannelOnlyInDcBin) {
  const std::vector<double> x(100, 1.5);
  const auto spec = real_dft(x, 128);
  ASSERT_EQ(spec.size(), 65u);
  EXPECT_NEAR(spec[0].real(), 150.0, 1e-12);
  EXPECT_NEAR(spec[0].imag(), 0.0, 1e-12);

  const std::vector<double> full(128, 1.5);
  const auto exact = real_dft(full, 128);
  EXPECT_NEAR(exact[0].real(), 1.5 * 128, 1e-12);
  for (std::size_t k = 1; k < exact.size(); ++k) EXPECT_LT(std::abs(exact[k]), 1e-12);
}

TEST(Spectrum, BinCenteredSinusoidIsConfined) {
  const std::size_t n = 256;
  const std::size_t k0 = 17;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(2.0 * std::numbers::pi * k0 * i / n + 0.4);
  const auto spec = real_dft(x, n);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    if (k == k0) {
      EXPECT_NEAR(std::abs(spec[k]), n / 2.0, 1e-9);
    } else {
      EXPECT_LT(std::abs(spec[k]), 1e-9);
    }
  }
}

TEST(Spectrum, ParsevalAndLinearity) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t n : {64u, 100u, 1000u, 6000u}) {
    const std::size_t n_fft = next_power_of_two(n);
    std::vector<double> x(n), y(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = g(rng);
      y[i] = g(rng);
      z[i] = 0.7 * x[i] - 2.5 * y[i];
    }
    const auto fx = real_dft(x, n_fft);
    const auto fy = real_dft(y, n_fft);
    const auto fz = real_dft(z, n_fft);
    double time_energy = 0.0;
    for (double v : x) time_energy += v * v;
    EXPECT_NEAR(full_energy(fx, n_fft) / n_fft / time_energy, 1.0, 1e-9);

    double scale = 0.0;
    double worst = 0.0;
    for (std::size_t k = 0; k < fz.size(); ++k) {
      scale = std::max(scale, std::abs(fz[k]));
      worst = std::max(worst, std::abs(fz[k] - (0.7 * fx[k] - 2.5 * fy[k])));
    }
    EXPECT_LT(worst / scale, 1e-9);
  }
}

TEST(Spectrum, InertialAssemblyMatchesDirectTransform) {
  const Vec3 g(2.0, -9.0, 3.2);
  const Vec3 b(0.1, 0.3, -0.2);
  const auto s = constructed(1.0, Vec3::Zero(), Vec3::Zero(), 700);
  const auto set = amplitude_spectra(s.a_vis, s.a_imu, s.rotations, 100.0);
  EXPECT_EQ(set.n_fft, 1024u);
  EXPECT_EQ(set.bins(), 513u);
  EXPECT_DOUBLE_EQ(set.bin_frequency(1), 100.0 / 1024.0);

  // a_imu here is the pure motion part; assembling with (-b, -g) must equal
  // the transform of a_imu + b + R g computed directly.
  const auto assembled = assemble_inertial(set, -b, -g);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> direct(s.a_imu.size());
    for (std::size_t k = 0; k < direct.size(); ++k) direct[k] = (s.a_imu[k] + b + s.rotations[k] * g)[i];
    const auto fd = real_dft(direct, set.n_fft);
    for (std::size_t k = 0; k < fd.size(); ++k) EXPECT_LT(std::abs(fd[k] - assembled[i][k]), 1e-9);
  }
}

TEST(Spectrum, RejectsShortInput) {
  const auto s = constructed(1.0, Vec3::Zero(), Vec3::Zero(), 63);
  EXPECT_THROW(amplitude_spectra(s.a_vis, s.a_imu, s.rotations, 100.0), std::invalid_argument);
}

TEST(FrequencyDomain, RecoversConstructedScaleAndGravity) {
  const Vec3 g_true = 9.81 * Vec3(0.2, -0.9, 0.35).normalized();
  const auto s = constructed(2.0, g_true, Vec3::Zero());
  const auto set = amplitude_spectra(s.a_vis, s.a_imu, s.rotations, 100.0);
  auto init = estimate_time_domain(s.a_vis, s.a_imu, s.rotations);
  // Start away from the exact answer so the simplex has work to do.
  init.scale *= 1.05;
  init.gravity = Eigen::AngleAxisd(rad(3.0), Vec3::UnitX()) * init.gravity;
  const auto sol = estimate_frequency_domain(set, init);
  EXPECT_NEAR(sol.scale, 2.0, 1e-3);
  EXPECT_LT(angle_deg(sol.gravity, g_true), 0.1);
  EXPECT_NEAR(sol.gravity.norm(), 9.81, 1e-9);
  EXPECT_TRUE(sol.converged);
  EXPECT_FALSE(sol.failed);
}

TEST(FrequencyDomain, ScaleEquivariance) {
  const Vec3 g_true = 9.81 * Vec3(0.2, -0.9, 0.35).normalized();
  const auto s = constructed(1.5, g_true, Vec3(0.05, 0.0, 0.1));
  const auto set = amplitude_spectra(s.a_vis, s.a_imu, s.rotations, 100.0);
  const auto base = estimate_frequency_domain(set, estimate_time_domain(s.a_vis, s.a_imu, s.rotations));

  Vec3List scaled;
  for (const auto& a : s.a_vis) scaled.push_back(3.0 * a);
  const auto set2 = amplitude_spectra(scaled, s.a_imu, s.rotations, 100.0);
  const auto sol = estimate_frequency_domain(set2, estimate_time_domain(scaled, s.a_imu, s.rotations));
  EXPECT_NEAR(sol.scale * 3.0 / base.scale, 1.0, 1e-6);
}

TEST(FrequencyDomain, NoRandomPerturbationImprovesTheObjective) {
  ScenarioSpec spec = default_scenario();
  auto s = analytic_stream(spec, 100.0, 40.0);
  std::mt19937_64 rng(9);
  for (auto& a : s.a_imu) a += random_vector(rng, 0.05);
  const auto set = amplitude_spectra(s.a_vis, s.a_imu, s.rotations, 100.0);
  const auto sol = estimate_frequency_domain(set, estimate_time_domain(s.a_vis, s.a_imu, s.rotations));
  const double best = frequency_objective(set, sol.f_max, sol.scale, sol.accel_bias, sol.gravity);
  EXPECT_NEAR(best, sol.objective_freq, 1e-12 * std::max(1.0, best));

  std::normal_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double mag = 1e-3 * std::pow(10.0, trial % 3);
    const double scale = sol.scale * (1.0 + mag * u(rng));
    const Vec3 bias = sol.accel_bias + random_vector(rng, mag);
    const Vec3 g = 9.81 * (sol.gravity / 9.81 + random_vector(rng, mag)).normalized();
    EXPECT_GE(frequency_objective(set, sol.f_max, scale, bias, g), best * (1.0 - 1e-9));
  }
}

TEST(FrequencyDomain, RejectsBandLimitAboveNyquist) {
  const auto s = constructed(1.0, Vec3(0, 0, 9.81), Vec3::Zero(), 128);
  const auto set = amplitude_spectra(s.a_vis, s.a_imu, s.rotations, 100.0);
  const auto init = estimate_time_domain(s.a_vis, s.a_imu, s.rotations);
  FrequencyOptions opts;
  opts.f_max = 50.0;
  EXPECT_THROW(estimate_frequency_domain(set, init, opts), std::invalid_argument);
}

TEST(FrequencyDomain, NonPositiveInitIsFlagged) {
  const auto s = constructed(1.0, Vec3(0, 0, 9.81), Vec3::Zero(), 128);
  const auto set = amplitude_spectra(s.a_vis, s.a_imu, s.rotations, 100.0);
  auto init = estimate_time_domain(s.a_vis, s.a_imu, s.rotations);
  init.scale = -1.0;
  const auto sol = estimate_frequency_domain(set, init);
  EXPECT_TRUE(sol.failed);
  EXPECT_EQ(sol.scale, -1.0);
}

TEST(FrequencyDomain, GravityAnglesStayOnSphere) {
  std::mt19937_64 rng(10);
  for (int k = 0; k < 50; ++k) {
    const Vec3 pole = random_vector(rng);
    const Vec3 g = gravity_from_angles(pole, 9.81, random_vector(rng)(0), random_vector(rng)(1));
    EXPECT_NEAR(g.norm(), 9.81, 1e-12);
  }
  const Vec3 pole(0.3, -0.2, 0.9);
  EXPECT_LT((gravity_from_angles(pole, 2.0, 0.0, 0.0) - 2.0 * pole.normalized()).norm(), 1e-14);
}
