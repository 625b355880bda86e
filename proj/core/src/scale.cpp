#include "imuscale/scale.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

namespace imuscale {

ScaleSolution estimate_time_domain(std::span<const Vec3> a_vis, std::span<const Vec3> a_imu,
                                   std::span<const Mat3> rotations, ScaleModel model) {
  const std::size_t n = a_vis.size();
  if (a_imu.size() != n) throw std::invalid_argument("estimate_time_domain: length mismatch");
  const bool with_bias = model != ScaleModel::Scale;
  const bool with_gravity = model == ScaleModel::ScaleBiasGravity;
  if (with_gravity && rotations.size() != n) {
    throw std::invalid_argument("estimate_time_domain: rotation count mismatch");
  }
  const int p = 1 + (with_bias ? 3 : 0) + (with_gravity ? 3 : 0);
  if (n < 7) throw std::invalid_argument("estimate_time_domain: need at least 7 samples");

  Eigen::MatrixXd a(3 * n, p);
  Eigen::VectorXd y(3 * n);
  a.setZero();
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = static_cast<Eigen::Index>(3 * k);
    a.block<3, 1>(row, 0) = a_vis[k];
    if (with_bias) a.block<3, 3>(row, 1) = Mat3::Identity();
    if (with_gravity) a.block<3, 3>(row, 4) = rotations[k];
    y.segment<3>(row) = a_imu[k];
  }

  // Column equilibration keeps the rank test independent of reconstruction units.
  Eigen::VectorXd col_scale(p);
  for (int j = 0; j < p; ++j) {
    const double norm = a.col(j).norm();
    col_scale(j) = norm > 0.0 ? 1.0 / norm : 1.0;
  }
  const Eigen::MatrixXd scaled = a * col_scale.asDiagonal();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();

  ScaleSolution out;
  const double smallest = sv(p - 1);
  if (!(sv(0) > 0.0) || smallest < 1e-8 * sv(0)) {
    out.rank_deficient = true;
    Eigen::VectorXd dir = col_scale.asDiagonal() * svd.matrixV().col(p - 1);
    dir.normalize();
    std::ostringstream os;
    os << "estimate_time_domain: rank-deficient system (condition " << sv(0) / smallest
       << "); null-space direction over (s";
    if (with_bias) os << ", bx, by, bz";
    if (with_gravity) os << ", gx, gy, gz";
    os << ") = (";
    // Full-length direction vector regardless of model, zero for absent unknowns.
    out.null_direction.assign(7, 0.0);
    for (int j = 0; j < p; ++j) {
      if (j) os << ", ";
      os << dir(j);
      out.null_direction[static_cast<std::size_t>(j)] = dir(j);
    }
    os << ")";
    if (with_gravity && out.null_direction.size() == 7) {
      os << "; gravity and bias are indistinguishable without rotation";
    }
    out.warnings.push_back(os.str());
  }

  const Eigen::VectorXd x = col_scale.asDiagonal() * svd.solve(y);
  out.scale = x(0);
  if (with_bias) out.accel_bias = x.segment<3>(1);
  if (with_gravity) out.gravity = x.segment<3>(4);
  out.objective_time = (a * x - y).squaredNorm();
  out.converged = !out.rank_deficient;
  return out;
}

double frequency_objective(const SpectrumSet& s, double f_max, double scale, const Vec3& bias,
                           const Vec3& gravity) {
  double total = 0.0;
  const std::size_t bins = s.bins();
  for (std::size_t k = 0; k < bins && s.bin_frequency(k) <= f_max; ++k) {
    for (int i = 0; i < 3; ++i) {
      const std::complex<double> inertial =
          s.inertial[i][k] - bias[i] * s.bias_carrier[k] - gravity[0] * s.rotation[i][0][k] -
          gravity[1] * s.rotation[i][1][k] - gravity[2] * s.rotation[i][2][k];
      const double diff = scale * std::abs(s.visual[i][k]) - std::abs(inertial);
      total += diff * diff;
    }
  }
  return total;
}

Vec3 gravity_from_angles(const Vec3& pole, double norm, double lat, double lon) {
  const Quat frame = Quat::FromTwoVectors(Vec3::UnitX(), pole.normalized());
  const Vec3 local(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat));
  return norm * (frame * local);
}

namespace {

struct SimplexProblem {
  const SpectrumSet* spectra;
  double f_max;
  double scale0;
  Vec3 pole;
  double g_norm;

  double scale(const gsl_vector* x) const { return gsl_vector_get(x, 0) * scale0; }
  Vec3 bias(const gsl_vector* x) const {
    return Vec3(gsl_vector_get(x, 1), gsl_vector_get(x, 2), gsl_vector_get(x, 3));
  }
  Vec3 gravity(const gsl_vector* x) const {
    return gravity_from_angles(pole, g_norm, gsl_vector_get(x, 4), gsl_vector_get(x, 5));
  }
};

double simplex_objective(const gsl_vector* x, void* params) {
  const auto* p = static_cast<const SimplexProblem*>(params);
  return frequency_objective(*p->spectra, p->f_max, p->scale(x), p->bias(x), p->gravity(x));
}

struct SimplexRun {
  double scale = 0.0;
  Vec3 bias = Vec3::Zero();
  Vec3 gravity = Vec3::Zero();
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

SimplexRun run_simplex(SimplexProblem& problem, const Vec3& bias0, double step_scale,
                       const FrequencyOptions& options) {
  constexpr std::size_t dim = 6;
  gsl_vector* x = gsl_vector_alloc(dim);
  gsl_vector* steps = gsl_vector_alloc(dim);
  gsl_vector_set(x, 0, 1.0);
  for (int i = 0; i < 3; ++i) gsl_vector_set(x, 1 + i, bias0[i]);
  gsl_vector_set(x, 4, 0.0);
  gsl_vector_set(x, 5, 0.0);

  gsl_vector_set(steps, 0, 0.05 * step_scale);
  for (int i = 1; i <= 3; ++i) gsl_vector_set(steps, i, 0.05 * step_scale);
  gsl_vector_set(steps, 4, 0.02 * step_scale);
  gsl_vector_set(steps, 5, 0.02 * step_scale);

  gsl_multimin_function fn{&simplex_objective, dim, &problem};
  gsl_multimin_fminimizer* minimizer =
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
  gsl_multimin_fminimizer_set(minimizer, &fn, x, steps);

  SimplexRun run;
  int status = GSL_CONTINUE;
  while (status == GSL_CONTINUE && run.iterations < options.max_iterations) {
    ++run.iterations;
    if (gsl_multimin_fminimizer_iterate(minimizer) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(minimizer),
                                    options.simplex_tolerance);
  }
  run.converged = status == GSL_SUCCESS;
  const gsl_vector* best = gsl_multimin_fminimizer_x(minimizer);
  run.scale = problem.scale(best);
  run.bias = problem.bias(best);
  run.gravity = problem.gravity(best);
  run.value = gsl_multimin_fminimizer_minimum(minimizer);

  gsl_multimin_fminimizer_free(minimizer);
  gsl_vector_free(steps);
  gsl_vector_free(x);
  return run;
}

}  // namespace

ScaleSolution estimate_frequency_domain(const SpectrumSet& spectra, const ScaleSolution& init,
                                        const FrequencyOptions& options) {
  const double nyquist = 0.5 * spectra.rate;
  if (!(options.f_max > 0.0) || !(options.f_max < nyquist)) {
    throw std::invalid_argument("estimate_frequency_domain: f_max must lie in (0, Nyquist = " +
                                std::to_string(nyquist) + " Hz)");
  }
  if (!(options.g_norm > 0.0)) throw std::invalid_argument("estimate_frequency_domain: g_norm must be positive");
  if (!(init.scale > 0.0)) {
    ScaleSolution out = init;
    out.failed = true;
    out.converged = false;
    out.warnings.push_back("estimate_frequency_domain: initial scale is not positive");
    return out;
  }

  // Silence GSL's default abort-on-error handler for the duration of the solve.
  gsl_error_handler_t* previous = gsl_set_error_handler_off();

  const Vec3 pole = init.gravity.norm() > 0.0 ? Vec3(init.gravity.normalized()) : Vec3(Vec3::UnitZ());
  SimplexProblem problem{&spectra, options.f_max, init.scale, pole, options.g_norm};

  SimplexRun run = run_simplex(problem, init.accel_bias, 1.0, options);
  int total_iterations = run.iterations;
  bool restarted = false;
  if (std::abs(run.scale - init.scale) > 0.2 * init.scale) {
    SimplexRun second = run_simplex(problem, init.accel_bias, 0.37, options);
    total_iterations += second.iterations;
    restarted = true;
    if (second.value < run.value) run = second;
  }
  gsl_set_error_handler(previous);

  ScaleSolution out;
  out.objective_time = init.objective_time;
  out.f_max = options.f_max;
  out.iterations = total_iterations;
  if (restarted) {
    out.warnings.push_back(
        "estimate_frequency_domain: scale moved more than 20% from the time-domain "
        "initialization; restarted from a perturbed simplex");
  }
  if (!(run.scale > 0.0)) {
    out = init;
    out.failed = true;
    out.converged = false;
    out.f_max = options.f_max;
    out.warnings.push_back("estimate_frequency_domain: scale driven to a non-positive value; "
                           "returning the time-domain solution");
    return out;
  }
  out.scale = run.scale;
  out.accel_bias = run.bias;
  out.gravity = run.gravity;
  out.objective_freq = run.value;
  out.converged = run.converged;
  if (!run.converged) {
    out.warnings.push_back("estimate_frequency_domain: simplex did not reach the size tolerance "
                           "within the iteration limit");
  }
  return out;
}

}  // namespace imuscale
