#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "imuscale/smoother.hpp"
#include "model_oracle.hpp"
#include "test_support.hpp"

using namespace imuscale;
using namespace imuscale::testing;

namespace {

std::vector<double> axis_of(const std::vector<Vec3>& v, int axis) {
  std::vector<double> out;
  for (const auto& p : v) out.push_back(p[axis]);
  return out;
}

Vec3Series circle(double rate, double seconds, double sigma, std::mt19937_64& rng) {
  const double w = 2.0 * std::numbers::pi * 0.5;
  Vec3Series s{{0.0, rate, static_cast<std::size_t>(seconds * rate)}, {}};
  std::normal_distribution<double> noise(0.0, sigma);
  for (std::size_t k = 0; k < s.base.size; ++k) {
    const double t = s.base.time(k);
    Vec3 p(std::cos(w * t), std::sin(w * t), 0.0);
    if (sigma > 0.0) p += Vec3(noise(rng), noise(rng), noise(rng));
    s.values.push_back(p);
  }
  return s;
}

// Worst relative error of |a| against the centripetal magnitude, skipping
// the first and last second where the smoother has one-sided support.
double worst_centripetal_error(const Vec3List& accel, double rate) {
  const double expected = std::pow(std::numbers::pi, 2);
  const std::size_t skip = static_cast<std::size_t>(rate);
  double worst = 0.0;
  for (std::size_t k = skip; k + skip < accel.size(); ++k) {
    worst = std::max(worst, std::abs(accel[k].norm() - expected) / expected);
  }
  return worst;
}

double rms_centripetal_error(const Vec3List& accel, double rate) {
  const double expected = std::pow(std::numbers::pi, 2);
  const std::size_t skip = static_cast<std::size_t>(rate);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = skip; k + skip < accel.size(); ++k, ++count) {
    sum += std::pow((accel[k].norm() - expected) / expected, 2);
  }
  return std::sqrt(sum / static_cast<double>(count));
}

}  // namespace

TEST(Smoother, TransitionAndProcessCovariance) {
  const auto f = jerk_transition(0.5);
  EXPECT_DOUBLE_EQ(f(0, 2), 0.125);
  EXPECT_DOUBLE_EQ(f(1, 2), 0.5);
  const auto qm = jerk_process_covariance(2.0, 3.0);
  EXPECT_DOUBLE_EQ(qm(0, 0), 3.0 * 32.0 / 20.0);
  EXPECT_DOUBLE_EQ(qm(0, 1), 3.0 * 16.0 / 8.0);
  EXPECT_DOUBLE_EQ(qm(2, 2), 6.0);
  EXPECT_EQ(qm, qm.transpose());
}

TEST(Smoother, LogSpacedGridEndpoints) {
  const auto g = log_spaced_grid(1e-4, 1e4, 17);
  ASSERT_EQ(g.size(), 17u);
  EXPECT_NEAR(g.front(), 1e-4, 1e-18);
  EXPECT_NEAR(g.back(), 1e4, 1e-9);
  EXPECT_NEAR(g[8], 1.0, 1e-12);
  EXPECT_NEAR(g[1] / g[0], std::sqrt(10.0), 1e-12);
}

TEST(Smoother, ConstantSignal) {
  std::vector<double> z(60, 2.5);
  const auto fw = kalman_forward(z, 0.01, 1.0, 1e-4);
  const auto sm = rts_backward(fw);
  for (const auto& m : sm.mean) {
    EXPECT_NEAR(m(0), 2.5, 1e-9);
    EXPECT_NEAR(m(1), 0.0, 1e-7);
    EXPECT_NEAR(m(2), 0.0, 1e-5);
  }
}

TEST(Smoother, MatchesBatchMapSolution) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 4; ++trial) {
    const double dt = 0.1;
    const double q = std::pow(10.0, trial - 1);
    const double r = 1e-3;
    const auto z3 = simulate_model(rng, 50, dt, q, r);
    const auto z = axis_of(z3, trial % 3);
    const auto fw = kalman_forward(z, dt, q, r);
    const auto sm = rts_backward(fw);
    const auto batch = batch_map(z, dt, q, r);
    double mean_err = 0.0;
    double cov_err = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      mean_err = std::max(mean_err, (sm.mean[k] - batch.mean[k]).cwiseAbs().maxCoeff());
      cov_err = std::max(cov_err, (sm.cov[k] - batch.cov[k]).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(mean_err, 1e-8) << "q=" << q;
    EXPECT_LT(cov_err, 1e-8) << "q=" << q;
  }
}

TEST(Smoother, LastSmoothedStateEqualsFiltered) {
  std::mt19937_64 rng(22);
  const auto z = axis_of(simulate_model(rng, 40, 0.05, 2.0, 1e-4), 0);
  const auto fw = kalman_forward(z, 0.05, 2.0, 1e-4);
  const auto sm = rts_backward(fw);
  EXPECT_EQ(sm.mean.back(), fw.filtered_mean.back());
  EXPECT_EQ(sm.cov.back(), fw.filtered_cov.back());
}

TEST(Smoother, IrregularTimesWithGapsMatchBatchMap) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> step(0.01, 0.12);
  std::bernoulli_distribution missing(0.3);
  for (int trial = 0; trial < 4; ++trial) {
    const double q = std::pow(10.0, trial - 1);
    const double r = 1e-3;
    const auto z3 = simulate_model(rng, 50, 0.05, q, r);
    std::vector<double> times(50, 0.0);
    std::vector<double> z = axis_of(z3, trial % 3);
    for (std::size_t k = 1; k < times.size(); ++k) {
      times[k] = times[k - 1] + step(rng);
      if (missing(rng)) z[k] = std::numeric_limits<double>::quiet_NaN();
    }
    z[0] = std::numeric_limits<double>::quiet_NaN();  // seed comes from a later sample
    const auto sm = rts_backward(kalman_forward(times, z, q, r));
    const auto batch = batch_map(times, z, q, r);
    double mean_err = 0.0;
    double cov_err = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      // NaN-propagating max: a broken oracle must not pass silently.
      const double dm = (sm.mean[k] - batch.mean[k]).cwiseAbs().maxCoeff();
      const double dc = (sm.cov[k] - batch.cov[k]).cwiseAbs().maxCoeff();
      mean_err = std::isfinite(dm) ? std::max(mean_err, dm) : dm;
      cov_err = std::isfinite(dc) ? std::max(cov_err, dc) : dc;
      if (!std::isfinite(mean_err) || !std::isfinite(cov_err)) break;
    }
    EXPECT_LT(mean_err, 1e-8) << "q=" << q;
    EXPECT_LT(cov_err, 1e-8) << "q=" << q;
  }
}

TEST(Smoother, UniformTimesReproduceUniformFilter) {
  std::mt19937_64 rng(25);
  const double dt = 0.04;
  const auto z = axis_of(simulate_model(rng, 60, dt, 3.0, 1e-4), 2);
  std::vector<double> times(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) times[k] = static_cast<double>(k) * dt;
  const auto a = kalman_forward(z, dt, 3.0, 1e-4);
  const auto b = kalman_forward(times, z, 3.0, 1e-4);
  EXPECT_NEAR(a.log_likelihood, b.log_likelihood, 1e-9 * std::abs(a.log_likelihood));
  for (std::size_t k = 0; k < z.size(); ++k) {
    EXPECT_LT((a.filtered_mean[k] - b.filtered_mean[k]).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Smoother, PredictionOnlySamplesLeaveLikelihoodUnchanged) {
  std::mt19937_64 rng(26);
  const auto z = axis_of(simulate_model(rng, 40, 0.1, 1.0, 1e-4), 0);
  std::vector<double> times;
  std::vector<double> padded;
  for (std::size_t k = 0; k < z.size(); ++k) {
    times.push_back(0.1 * static_cast<double>(k));
    padded.push_back(z[k]);
    times.push_back(0.1 * static_cast<double>(k) + 0.037);
    padded.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  const auto plain = kalman_forward(z, 0.1, 1.0, 1e-4);
  const auto fw = kalman_forward(times, padded, 1.0, 1e-4);
  EXPECT_NEAR(fw.log_likelihood, plain.log_likelihood, 1e-9 * std::abs(plain.log_likelihood));
  EXPECT_TRUE(std::isnan(fw.innovation[1]));
  EXPECT_THROW(kalman_forward(std::vector<double>{0.0, -1.0}, std::vector<double>{1.0, 2.0}, 1.0, 1.0),
               std::invalid_argument);
}

TEST(Smoother, SamplesOnTheGridMatchUniformSmoothing) {
  std::mt19937_64 rng(27);
  const auto z = simulate_model(rng, 120, 0.02, 4.0, 1e-5);
  const Vec3Series series{{1.5, 50.0, z.size()}, z};
  std::vector<double> times(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) times[k] = series.base.time(k);
  const auto uniform = smooth_positions(series);
  const auto sampled = smooth_samples(times, z, series.base);
  EXPECT_EQ(uniform.q, sampled.q);
  EXPECT_EQ(uniform.r, sampled.r);
  for (std::size_t k = 0; k < z.size(); ++k) {
    EXPECT_LT((uniform.acceleration[k] - sampled.acceleration[k]).norm(), 1e-8);
  }
}

TEST(Smoother, UpsampledStatesCarryNoInterpolationBias) {
  // 30 Hz frames reported on a 100 Hz grid: the model predicts between frames
  // where linear upsampling would flatten the curvature.
  const double w = 2.0 * std::numbers::pi * 1.0;
  std::vector<double> times;
  std::vector<Vec3> frames;
  for (int k = 0; k <= 300; ++k) {
    const double t = k / 30.0;
    times.push_back(t);
    frames.emplace_back(std::cos(w * t), std::sin(w * t), 0.0);
  }
  SmootherConfig cfg;
  cfg.measurement_variance = 1e-10;
  const TimeBase grid{0.0, 100.0, 1001};
  const auto out = smooth_samples(times, frames, grid, cfg);
  const double expected = w * w;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 100; k + 100 < grid.size; ++k, ++count) sum += out.acceleration[k].norm() - expected;
  EXPECT_LT(std::abs(sum / static_cast<double>(count)) / expected, 1e-3);
  EXPECT_THROW(smooth_samples(std::vector<double>(frames.size(), 0.0), frames, grid), std::invalid_argument);
}

TEST(Smoother, SmoothedVarianceNeverExceedsFiltered) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> lg(-3.0, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    const double dt = 0.01 * std::pow(10.0, lg(rng) / 3.0);
    const double q = std::pow(10.0, lg(rng));
    const double r = std::pow(10.0, lg(rng) - 3.0);
    const auto z = axis_of(simulate_model(rng, 200, dt, q, r), 1);
    const auto fw = kalman_forward(z, dt, q, r);
    const auto sm = rts_backward(fw);
    for (std::size_t k = 0; k < z.size(); ++k) {
      for (int i = 0; i < 3; ++i) {
        const double filtered = fw.filtered_cov[k](i, i);
        EXPECT_LE(sm.cov[k](i, i), filtered + 1e-12 * std::max(1.0, filtered));
      }
      EXPECT_LE(sm.cov[k].trace(), fw.filtered_cov[k].trace() + 1e-12 * std::max(1.0, fw.filtered_cov[k].trace()));
    }
  }
}

TEST(Smoother, LikelihoodPeaksNearGeneratingProcessNoise) {
  const auto grid = log_spaced_grid(1e-4, 1e4, 17);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const double dt = 0.1;
    const double r = 1e-6;
    const std::size_t truth_index = 8;  // q* = 1
    const auto z = simulate_model(rng, 50, dt, grid[truth_index], r);
    const auto sel = select_process_noise(z, dt, r, grid);
    EXPECT_LE(std::abs(static_cast<long>(sel.index) - static_cast<long>(truth_index)), 1)
        << "seed " << seed << " picked q=" << sel.q;
  }
}

TEST(Smoother, WhiteNoisePrefersSmoothestModel) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<Vec3> z(300);
  for (auto& p : z) p = Vec3(noise(rng), noise(rng), noise(rng));
  const auto grid = log_spaced_grid(1e-4, 1e4, 17);
  const auto sel = select_process_noise(z, 0.01, 1e-4, grid);
  EXPECT_LE(sel.index, 1u);
}

TEST(Smoother, LikelihoodFiniteAcrossGrid) {
  std::mt19937_64 rng(32);
  const auto z = simulate_model(rng, 300, 1.0 / 30.0, 5.0, 1e-5);
  const auto sel = select_process_noise(z, 1.0 / 30.0, 1e-5, log_spaced_grid(1e-4, 1e4, 17));
  for (double ll : sel.log_likelihood) EXPECT_TRUE(std::isfinite(ll));
}

TEST(Smoother, SinglePointGridWarnsAtBoundary) {
  std::mt19937_64 rng(33);
  Vec3Series s{{0.0, 30.0, 100}, simulate_model(rng, 100, 1.0 / 30.0, 1.0, 1e-4)};
  SmootherConfig cfg;
  cfg.q_grid = {1.0};
  const auto out = smooth_positions(s, cfg);
  EXPECT_EQ(out.q, 1.0);
  ASSERT_FALSE(out.warnings.empty());
  EXPECT_NE(out.warnings.back().find("boundary"), std::string::npos);
}

TEST(Smoother, MeasurementVarianceFromSecondDifferences) {
  std::mt19937_64 rng(34);
  std::normal_distribution<double> noise(0.0, 0.003);
  std::vector<Vec3> z(20000);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double t = k * 0.01;
    z[k] = Vec3(std::sin(0.5 * t), 0.2 * t, 1.0) + Vec3(noise(rng), noise(rng), noise(rng));
  }
  EXPECT_NEAR(estimate_measurement_variance(z), 9e-6, 9e-6 * 0.05);
}

TEST(Smoother, CircleWithoutNoise) {
  std::mt19937_64 rng(40);
  const auto s = circle(100.0, 10.0, 0.0, rng);
  const auto out = smooth_positions(s);
  EXPECT_LT(worst_centripetal_error(out.acceleration, 100.0), 0.01);
}

TEST(Smoother, CircleWithNoiseBeatsDoubleDifference) {
  std::mt19937_64 rng(41);
  const auto s = circle(100.0, 10.0, 0.002, rng);
  const auto out = smooth_positions(s);
  EXPECT_LT(rms_centripetal_error(out.acceleration, 100.0), 0.05);

  const auto raw = double_difference(s);
  const double expected = std::pow(std::numbers::pi, 2);
  double rms = 0.0;
  for (const auto& a : raw) rms += std::pow(a.norm() - expected, 2);
  rms = std::sqrt(rms / raw.size());
  EXPECT_GT(rms / expected, 0.5);
}

TEST(Smoother, ConstantPositionSuppressesNoiseAcceleration) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> noise(0.0, 0.002);
  Vec3Series s{{0.0, 30.0, 600}, {}};
  for (std::size_t k = 0; k < s.base.size; ++k) s.values.push_back(Vec3(1, 2, 3) + Vec3(noise(rng), noise(rng), noise(rng)));
  const auto out = smooth_positions(s);
  const auto raw = double_difference(s);
  double a = 0.0, b = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    a += out.acceleration[k].squaredNorm();
    b += raw[k].squaredNorm();
  }
  EXPECT_LT(std::sqrt(a / b), 0.1);
}

TEST(Smoother, AccelerationStateMatchesSecondDifferenceOfPosition) {
  std::mt19937_64 rng(43);
  const auto s = circle(100.0, 10.0, 0.0, rng);
  const auto out = smooth_positions(s);
  const Vec3Series smoothed{s.base, out.position};
  const auto dd = double_difference(smoothed);
  double worst = 0.0;
  for (std::size_t k = 100; k + 100 < dd.size(); ++k) worst = std::max(worst, (dd[k] - out.acceleration[k]).norm());
  // Central second difference of a pi-rad/s circle has error pi^4 dt^2 / 12.
  EXPECT_LT(worst, 2.0 * std::pow(std::numbers::pi, 4) * 1e-4 / 12.0);
}

TEST(Smoother, RejectsBadParameters) {
  std::vector<double> z(10, 0.0);
  EXPECT_THROW(kalman_forward(z, 0.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(kalman_forward(z, 0.1, -1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(kalman_forward(z, 0.1, 1.0, 0.0), std::invalid_argument);
}
