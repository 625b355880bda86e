#include "imuscale/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace imuscale {
namespace {

KalmanCov symmetrize(const KalmanCov& p) { return 0.5 * (p + p.transpose()); }

}  // namespace

std::vector<double> log_spaced_grid(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) {
    throw std::invalid_argument("log_spaced_grid: need 0 < lo <= hi and count >= 1");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < count; ++i) grid[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
  return grid;
}

Eigen::Matrix3d jerk_transition(double dt) {
  Eigen::Matrix3d f;
  f << 1.0, dt, 0.5 * dt * dt,
       0.0, 1.0, dt,
       0.0, 0.0, 1.0;
  return f;
}

Eigen::Matrix3d jerk_process_covariance(double dt, double q) {
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  const double dt4 = dt3 * dt;
  const double dt5 = dt4 * dt;
  Eigen::Matrix3d m;
  m << dt5 / 20.0, dt4 / 8.0, dt3 / 6.0,
       dt4 / 8.0,  dt3 / 3.0, dt2 / 2.0,
       dt3 / 6.0,  dt2 / 2.0, dt;
  return q * m;
}

double estimate_measurement_variance(std::span<const Vec3> positions) {
  if (positions.size() < 4) throw std::invalid_argument("estimate_measurement_variance: too short");
  const std::size_t m = positions.size() - 2;
  double total = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    double mean = 0.0;
    std::vector<double> e(m);
    for (std::size_t k = 0; k < m; ++k) {
      e[k] = positions[k + 1][axis] - 0.5 * (positions[k][axis] + positions[k + 2][axis]);
      mean += e[k];
    }
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (double v : e) var += (v - mean) * (v - mean);
    total += var / static_cast<double>(m);
  }
  return total / 3.0 * (2.0 / 3.0);
}

namespace {

ForwardPass run_forward(std::vector<double> steps, std::span<const double> z, double q, double r) {
  const std::size_t n = z.size();
  constexpr double log_two_pi = 1.8378770664093453;  // log(2 pi)

  ForwardPass out;
  out.steps = std::move(steps);
  out.q = q;
  out.r = r;
  out.predicted_mean.resize(n);
  out.predicted_cov.resize(n);
  out.filtered_mean.resize(n);
  out.filtered_cov.resize(n);
  out.innovation.resize(n);
  out.innovation_variance.resize(n);

  const auto seed = std::find_if(z.begin(), z.end(), [](double v) { return std::isfinite(v); });
  if (seed == z.end()) throw std::invalid_argument("kalman_forward: no finite measurement");
  KalmanState m(*seed, 0.0, 0.0);
  KalmanCov p = KalmanCov::Identity() * (1e6 * r);
  double ll = 0.0;

  // Uniform runs reuse one F/Q pair.
  double cached_step = -1.0;
  Eigen::Matrix3d f;
  Eigen::Matrix3d qm;
  for (std::size_t k = 0; k < n; ++k) {
    const double step = out.steps[k];
    if (k > 0 && step > 0.0) {
      if (step != cached_step) {
        f = jerk_transition(step);
        qm = jerk_process_covariance(step, q);
        cached_step = step;
      }
      m = f * m;
      p = symmetrize(f * p * f.transpose() + qm);
    }
    out.predicted_mean[k] = m;
    out.predicted_cov[k] = p;

    if (std::isfinite(z[k])) {
      const double s = p(0, 0) + r;
      if (!(s > 0.0) || !std::isfinite(s)) {
        std::ostringstream os;
        os << "kalman_forward: innovation variance " << s << " at sample " << k << " (q=" << q
           << ", r=" << r << ")";
        throw Error(Stage::Smoothing, os.str(), "check the measurement noise and process noise grid");
      }
      const double v = z[k] - m(0);
      const KalmanState gain = p.col(0) / s;
      m += gain * v;
      p = symmetrize(p - gain * p.row(0));
      ll += -0.5 * (log_two_pi + std::log(s) + v * v / s);
      out.innovation[k] = v;
      out.innovation_variance[k] = s;
    } else {
      out.innovation[k] = std::numeric_limits<double>::quiet_NaN();
      out.innovation_variance[k] = std::numeric_limits<double>::quiet_NaN();
    }
    out.filtered_mean[k] = m;
    out.filtered_cov[k] = p;
  }
  out.log_likelihood = ll;
  return out;
}

void check_noise(double q, double r) {
  if (!(q > 0.0) || !(r > 0.0)) throw std::invalid_argument("kalman_forward: q and r must be positive");
}

}  // namespace

ForwardPass kalman_forward(std::span<const double> z, double dt, double q, double r) {
  if (!(dt > 0.0)) throw std::invalid_argument("kalman_forward: dt must be positive");
  check_noise(q, r);
  if (z.size() < 2) throw std::invalid_argument("kalman_forward: need at least 2 measurements");
  std::vector<double> steps(z.size(), dt);
  steps[0] = 0.0;
  return run_forward(std::move(steps), z, q, r);
}

ForwardPass kalman_forward(std::span<const double> times, std::span<const double> z, double q,
                           double r) {
  check_noise(q, r);
  if (times.size() != z.size()) throw std::invalid_argument("kalman_forward: length mismatch");
  if (z.size() < 2) throw std::invalid_argument("kalman_forward: need at least 2 samples");
  std::vector<double> steps(z.size(), 0.0);
  for (std::size_t k = 1; k < times.size(); ++k) {
    steps[k] = times[k] - times[k - 1];
    if (!(steps[k] >= 0.0)) throw std::invalid_argument("kalman_forward: times must be nondecreasing");
  }
  return run_forward(std::move(steps), z, q, r);
}

AxisSmoothing rts_backward(const ForwardPass& fw) {
  const std::size_t n = fw.filtered_mean.size();
  if (n == 0 || fw.predicted_mean.size() != n || fw.predicted_cov.size() != n ||
      fw.filtered_cov.size() != n) {
    throw std::invalid_argument("rts_backward: incomplete forward pass");
  }
  if (fw.steps.size() != n) throw std::invalid_argument("rts_backward: incomplete forward pass");

  AxisSmoothing out;
  out.mean.resize(n);
  out.cov.resize(n);
  out.mean[n - 1] = fw.filtered_mean[n - 1];
  out.cov[n - 1] = fw.filtered_cov[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    KalmanCov pp = fw.predicted_cov[i + 1];
    Eigen::LLT<KalmanCov> llt(pp);
    if (llt.info() != Eigen::Success) {
      pp += KalmanCov::Identity() * (1e-12 * pp.trace());
      llt.compute(pp);
      if (llt.info() != Eigen::Success) {
        throw Error(Stage::Smoothing,
                    "rts_backward: singular predicted covariance at sample " + std::to_string(i + 1));
      }
    }
    // G = P_f F^T P_p^{-1}, computed as (P_p^{-1} F P_f)^T.
    const Eigen::Matrix3d f = jerk_transition(fw.steps[i + 1]);
    const Eigen::Matrix3d gain = llt.solve(f * fw.filtered_cov[i]).transpose();
    out.mean[i] = fw.filtered_mean[i] + gain * (out.mean[i + 1] - fw.predicted_mean[i + 1]);
    out.cov[i] = symmetrize(fw.filtered_cov[i] +
                            gain * (out.cov[i + 1] - fw.predicted_cov[i + 1]) * gain.transpose());
  }
  return out;
}

namespace {

void check_grid(std::span<const double> q_grid) {
  if (q_grid.empty()) throw std::invalid_argument("select_process_noise: empty grid");
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    if (!(q_grid[i] > 0.0) || (i > 0 && !(q_grid[i] > q_grid[i - 1]))) {
      throw std::invalid_argument("select_process_noise: grid must be positive and ascending");
    }
  }
}

std::array<std::vector<double>, 3> split_axes(std::span<const Vec3> positions) {
  std::array<std::vector<double>, 3> axes;
  for (int a = 0; a < 3; ++a) {
    axes[a].resize(positions.size());
    for (std::size_t k = 0; k < positions.size(); ++k) axes[a][k] = positions[k][a];
  }
  return axes;
}

template <typename Forward>
NoiseSelection pick_q(std::span<const double> q_grid, Forward&& forward) {
  NoiseSelection out;
  out.log_likelihood.resize(q_grid.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    double ll = 0.0;
    for (int a = 0; a < 3; ++a) ll += forward(a, q_grid[i]).log_likelihood;
    out.log_likelihood[i] = ll;
    if (ll > best) {  // strict: ties keep the smaller q
      best = ll;
      out.index = i;
    }
  }
  out.q = q_grid[out.index];
  out.at_boundary = out.index == 0 || out.index + 1 == q_grid.size();
  return out;
}

// Variance from the config or the data; a noise-free input gets a floor
// relative to the signal spread.
double resolve_measurement_variance(std::span<const Vec3> values, const SmootherConfig& config,
                                    std::vector<std::string>& warnings) {
  double r = config.measurement_variance ? *config.measurement_variance
                                         : estimate_measurement_variance(values);
  if (!(r > 0.0)) {
    double spread = 0.0;
    for (const auto& p : values) spread += (p - values.front()).squaredNorm();
    r = std::max(1e-12 * spread / static_cast<double>(values.size()), 1e-18);
    warnings.push_back("smooth_positions: measurement variance estimate is zero; using floor");
  }
  return r;
}

void select_into(StateTrajectory& out, const NoiseSelection& selection) {
  out.q = selection.q;
  out.log_likelihood = selection.log_likelihood;
  if (selection.at_boundary) {
    std::ostringstream os;
    os << "smooth_positions: selected process noise q=" << selection.q
       << " lies on the grid boundary; consider widening the grid";
    out.warnings.push_back(os.str());
  }
}

}  // namespace

NoiseSelection select_process_noise(std::span<const Vec3> positions, double dt, double r,
                                    std::span<const double> q_grid) {
  check_grid(q_grid);
  const auto axes = split_axes(positions);
  return pick_q(q_grid, [&](int a, double q) { return kalman_forward(axes[a], dt, q, r); });
}

NoiseSelection select_process_noise(std::span<const double> times, std::span<const Vec3> positions,
                                    double r, std::span<const double> q_grid) {
  check_grid(q_grid);
  const auto axes = split_axes(positions);
  return pick_q(q_grid, [&](int a, double q) { return kalman_forward(times, axes[a], q, r); });
}

StateTrajectory smooth_positions(const Vec3Series& positions, const SmootherConfig& config) {
  const std::size_t n = positions.values.size();
  if (n < 10) throw Error(Stage::Smoothing, "smooth_positions: need at least 10 samples");
  const double dt = positions.base.dt();

  StateTrajectory out;
  out.base = positions.base;
  const double r = resolve_measurement_variance(positions.values, config, out.warnings);
  out.r = r;
  select_into(out, select_process_noise(positions.values, dt, r, config.q_grid));

  out.position.resize(n);
  out.velocity.resize(n);
  out.acceleration.resize(n);
  const auto axes = split_axes(positions.values);
  for (int a = 0; a < 3; ++a) {
    const auto smoothed = rts_backward(kalman_forward(axes[a], dt, out.q, r));
    for (std::size_t k = 0; k < n; ++k) {
      out.position[k][a] = smoothed.mean[k](0);
      out.velocity[k][a] = smoothed.mean[k](1);
      out.acceleration[k][a] = smoothed.mean[k](2);
    }
    out.covariance[a] = smoothed.cov;
  }
  return out;
}

StateTrajectory smooth_samples(std::span<const double> times, std::span<const Vec3> positions,
                               const TimeBase& grid, const SmootherConfig& config) {
  const std::size_t n = positions.size();
  if (times.size() != n) throw std::invalid_argument("smooth_samples: length mismatch");
  if (n < 10) throw Error(Stage::Smoothing, "smooth_samples: need at least 10 samples");
  if (grid.size == 0) throw std::invalid_argument("smooth_samples: empty grid");
  for (std::size_t k = 1; k < n; ++k) {
    if (!(times[k] > times[k - 1])) throw std::invalid_argument("smooth_samples: times must increase");
  }

  StateTrajectory out;
  out.base = grid;
  const double r = resolve_measurement_variance(positions, config, out.warnings);
  out.r = r;
  // Prediction-only grid points leave the likelihood untouched, so selection
  // runs on the samples alone.
  select_into(out, select_process_noise(times, positions, r, config.q_grid));

  // Merged timeline: every sample and every grid point, coincident ones fused.
  constexpr double kSame = 1e-9;
  std::vector<double> event_time;
  std::vector<std::ptrdiff_t> event_sample;  // -1: grid only
  std::vector<std::size_t> grid_event(grid.size);
  event_time.reserve(n + grid.size);
  event_sample.reserve(n + grid.size);
  std::size_t i = 0;
  std::size_t g = 0;
  while (i < n || g < grid.size) {
    const double tg = g < grid.size ? grid.time(g) : std::numeric_limits<double>::infinity();
    const double ts = i < n ? times[i] : std::numeric_limits<double>::infinity();
    if (std::abs(tg - ts) <= kSame) {
      event_time.push_back(ts);
      event_sample.push_back(static_cast<std::ptrdiff_t>(i++));
      grid_event[g++] = event_time.size() - 1;
    } else if (ts < tg) {
      event_time.push_back(ts);
      event_sample.push_back(static_cast<std::ptrdiff_t>(i++));
    } else {
      event_time.push_back(tg);
      event_sample.push_back(-1);
      grid_event[g++] = event_time.size() - 1;
    }
  }

  out.position.resize(grid.size);
  out.velocity.resize(grid.size);
  out.acceleration.resize(grid.size);
  std::vector<double> z(event_time.size());
  for (int a = 0; a < 3; ++a) {
    for (std::size_t e = 0; e < z.size(); ++e) {
      z[e] = event_sample[e] < 0 ? std::numeric_limits<double>::quiet_NaN()
                                 : positions[static_cast<std::size_t>(event_sample[e])][a];
    }
    const auto smoothed = rts_backward(kalman_forward(event_time, z, out.q, r));
    out.covariance[a].resize(grid.size);
    for (std::size_t k = 0; k < grid.size; ++k) {
      const auto& state = smoothed.mean[grid_event[k]];
      out.position[k][a] = state(0);
      out.velocity[k][a] = state(1);
      out.acceleration[k][a] = state(2);
      out.covariance[a][k] = smoothed.cov[grid_event[k]];
    }
  }
  return out;
}

Vec3List double_difference(const Vec3Series& positions) {
  const auto& p = positions.values;
  const std::size_t n = p.size();
  if (n < 4) throw std::invalid_argument("double_difference: need at least 4 samples");
  const double rate2 = positions.base.rate * positions.base.rate;
  Vec3List out(n);
  for (std::size_t k = 1; k + 1 < n; ++k) out[k] = (p[k + 1] - 2.0 * p[k] + p[k - 1]) * rate2;
  out[0] = (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * rate2;
  out[n - 1] = (2.0 * p[n - 1] - 5.0 * p[n - 2] + 4.0 * p[n - 3] - p[n - 4]) * rate2;
  return out;
}

}  // namespace imuscale
