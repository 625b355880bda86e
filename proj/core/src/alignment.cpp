#include "imuscale/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

#include "imuscale/ingest.hpp"

namespace imuscale {

RotationBiasFit fit_rotation_bias(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size()) {
    throw std::invalid_argument("fit_rotation_bias: length mismatch");
  }
  const std::size_t n = source.size();
  if (n < 3) throw std::invalid_argument("fit_rotation_bias: need at least 3 pairs");

  Vec3 src_mean = Vec3::Zero();
  Vec3 tgt_mean = Vec3::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    if (!source[k].allFinite() || !target[k].allFinite()) {
      throw std::invalid_argument("fit_rotation_bias: non-finite input");
    }
    src_mean += source[k];
    tgt_mean += target[k];
  }
  src_mean /= static_cast<double>(n);
  tgt_mean /= static_cast<double>(n);

  Mat3 h = Mat3::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    h.noalias() += (source[k] - src_mean) * (target[k] - tgt_mean).transpose();
  }

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

  RotationBiasFit fit;
  fit.singular_values = svd.singularValues();
  fit.rotation = v * d * u.transpose();
  fit.bias = tgt_mean - fit.rotation * src_mean;
  const double largest = fit.singular_values(0);
  fit.degenerate = !(largest > 0.0) || fit.singular_values(1) < 1e-12 * largest;

  double sum_sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sum_sq += (target[k] - (fit.rotation * source[k] + fit.bias)).squaredNorm();
  }
  fit.rms_residual = std::sqrt(sum_sq / static_cast<double>(n));
  return fit;
}

int golden_section_iterations(double width, double tol) {
  if (!(width > tol)) return 0;
  return static_cast<int>(std::ceil(std::log(width / tol) / std::log(std::numbers::phi)));
}

GoldenSectionResult golden_section_minimize(const std::function<double(double)>& f, double lo,
                                            double hi, double tol) {
  if (!(hi > lo)) throw std::invalid_argument("golden_section_minimize: empty bracket");
  if (!(tol > 0.0)) throw std::invalid_argument("golden_section_minimize: tolerance must be positive");

  constexpr double inv_phi = 1.0 / std::numbers::phi;
  double a = lo;
  double b = hi;
  double c = b - (b - a) * inv_phi;
  double d = a + (b - a) * inv_phi;
  double fc = f(c);
  double fd = f(d);
  int iterations = 0;
  while (b - a >= tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * inv_phi;
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * inv_phi;
      fd = f(d);
    }
    ++iterations;
  }

  GoldenSectionResult out;
  out.iterations = iterations;
  out.lo = a;
  out.hi = b;
  const double mid = 0.5 * (a + b);
  const double fm = f(mid);
  out.x = mid;
  out.value = fm;
  if (fc < out.value) {
    out.x = c;
    out.value = fc;
  }
  if (fd < out.value) {
    out.x = d;
    out.value = fd;
  }
  return out;
}

ScalarSeries magnitudes(const Vec3Series& series) {
  ScalarSeries out;
  out.base = series.base;
  out.values.reserve(series.values.size());
  for (const auto& v : series.values) out.values.push_back(v.norm());
  return out;
}

Vec3Series moving_average(const Vec3Series& series, double window) {
  const auto half = static_cast<std::size_t>(std::floor(0.5 * window * series.base.rate + 0.5));
  if (half == 0) return series;
  const std::size_t n = series.values.size();
  if (n <= 2 * half + 2) throw std::invalid_argument("moving_average: series shorter than the window");
  Vec3Series out;
  out.base = {series.base.time(half), series.base.rate, n - 2 * half};
  out.values.resize(out.base.size);
  const double inv = 1.0 / static_cast<double>(2 * half + 1);
  Vec3 sum = Vec3::Zero();
  for (std::size_t k = 0; k < 2 * half + 1; ++k) sum += series.values[k];
  for (std::size_t k = 0; k < out.base.size; ++k) {
    if (k > 0) sum += series.values[k + 2 * half] - series.values[k - 1];
    out.values[k] = sum * inv;
  }
  return out;
}

namespace {

double variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(x.size());
}

}  // namespace

double coarse_offset(const ScalarSeries& speed_vis, const ScalarSeries& speed_imu, double max_lag) {
  if (std::abs(speed_vis.base.rate - speed_imu.base.rate) > 1e-9 * speed_vis.base.rate) {
    throw std::invalid_argument("coarse_offset: series must share one rate");
  }
  if (speed_vis.values.size() < 3 || speed_imu.values.size() < 3) {
    throw std::invalid_argument("coarse_offset: series too short");
  }
  const double overlap = std::min(speed_vis.base.last(), speed_imu.base.last()) -
                         std::max(speed_vis.base.t0, speed_imu.base.t0);
  if (!(max_lag >= 0.0) || !(max_lag < 0.5 * overlap)) {
    throw std::invalid_argument("coarse_offset: max_lag must be below half the overlap (" +
                                std::to_string(0.5 * overlap) + " s)");
  }
  if (variance(speed_vis.values) < 1e-12 || variance(speed_imu.values) < 1e-12) {
    throw Error(Stage::Alignment, "angular speed is flat; cannot estimate the time offset",
                "record the sequence with more rotational motion");
  }

  const double rate = speed_vis.base.rate;
  const int max_lag_samples = static_cast<int>(std::floor(max_lag * rate + 1e-9));
  const double imu_first = speed_imu.base.t0;
  const double imu_last = speed_imu.base.last();

  double best_corr = -std::numeric_limits<double>::infinity();
  int best_lag = 0;
  for (int lag = -max_lag_samples; lag <= max_lag_samples; ++lag) {
    const double shift = static_cast<double>(lag) / rate;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < speed_vis.values.size(); ++k) {
      const double t = speed_vis.base.time(k) + shift;
      if (t < imu_first - 1e-9 || t > imu_last + 1e-9) continue;
      const double x = speed_vis.values[k];
      const double y = sample_linear(speed_imu, std::clamp(t, imu_first, imu_last));
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
      ++count;
    }
    if (count < 3) continue;
    const double n = static_cast<double>(count);
    const double cov = sxy - sx * sy / n;
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    if (vx <= 0.0 || vy <= 0.0) continue;
    const double corr = cov / std::sqrt(vx * vy);
    // Ties go to the smaller |lag|.
    if (corr > best_corr || (corr == best_corr && std::abs(lag) < std::abs(best_lag))) {
      best_corr = corr;
      best_lag = lag;
    }
  }
  return static_cast<double>(best_lag) / rate;
}

AlignmentResult align(const Vec3Series& omega_imu_raw, const Vec3Series& omega_vis_raw,
                      const AlignOptions& options) {
  if (std::abs(omega_imu_raw.base.rate - omega_vis_raw.base.rate) > 1e-9 * omega_vis_raw.base.rate) {
    throw std::invalid_argument("align: series must share one rate");
  }
  if (!(options.search_halfwidth > 0.0)) {
    throw std::invalid_argument("align: search_halfwidth must be positive");
  }

  // Both streams go through the same zero-phase filter, which commutes with
  // the time shift and the linear rotation/bias model but damps the white
  // noise whose interpolation gain would otherwise favour half-sample offsets.
  const Vec3Series omega_imu = moving_average(omega_imu_raw, options.prefilter);
  const Vec3Series omega_vis = moving_average(omega_vis_raw, options.prefilter);

  AlignmentResult result;
  const double overlap = std::min(omega_imu.base.last(), omega_vis.base.last()) -
                         std::max(omega_imu.base.t0, omega_vis.base.t0);
  if (overlap < 5.0) {
    result.warnings.push_back("align: only " + std::to_string(overlap) +
                              " s of overlap; at least 5 s is recommended");
  }

  if (options.initial_offset) {
    result.coarse_offset = *options.initial_offset;
  } else {
    try {
      result.coarse_offset =
          coarse_offset(magnitudes(omega_vis), magnitudes(omega_imu), options.max_coarse_lag);
    } catch (const Error& e) {
      result.coarse_offset = 0.0;
      result.warnings.push_back(std::string(e.what()) + "; assuming zero offset");
    }
  }

  const double lo = result.coarse_offset - options.search_halfwidth;
  const double hi = result.coarse_offset + options.search_halfwidth;
  result.search_lo = lo;
  result.search_hi = hi;

  // One fixed sample set for every probe so objective values stay comparable.
  const double imu_first = omega_imu.base.t0;
  const double imu_last = omega_imu.base.last();
  std::vector<std::size_t> used;
  for (std::size_t k = 0; k < omega_vis.values.size(); ++k) {
    const double t = omega_vis.base.time(k);
    if (t + lo >= imu_first - 1e-9 && t + hi <= imu_last + 1e-9) used.push_back(k);
  }
  if (used.size() < 3) {
    throw Error(Stage::Alignment, "IMU and camera streams do not overlap over the search window",
                "check that both files cover the same recording");
  }
  result.samples_used = used.size();

  Vec3List target(used.size());
  for (std::size_t i = 0; i < used.size(); ++i) target[i] = omega_vis.values[used[i]];
  Vec3List source(used.size());
  auto fit_at = [&](double td) {
    for (std::size_t i = 0; i < used.size(); ++i) {
      const double t = std::clamp(omega_vis.base.time(used[i]) + td, imu_first, imu_last);
      source[i] = sample_linear(omega_imu, t);
    }
    return fit_rotation_bias(source, target);
  };

  const auto search = golden_section_minimize(
      [&](double td) { return fit_at(td).rms_residual; }, lo, hi, options.tolerance);

  const auto best = fit_at(search.x);
  result.sensor_to_camera = best.rotation;
  result.gyro_bias = best.bias;
  result.time_offset = search.x;
  result.rms_residual = best.rms_residual;
  result.iterations = search.iterations;
  result.degenerate = best.degenerate;
  if (best.degenerate) {
    result.warnings.push_back(
        "align: rotation fit is degenerate (angular velocities nearly collinear); R_S is "
        "unobservable about the motion axis");
  }
  const double edge = 2.0 * options.tolerance;
  if (search.x - lo < edge || hi - search.x < edge) {
    result.at_boundary = true;
    std::ostringstream os;
    os << "align: time offset " << search.x << " s lies on the search window boundary [" << lo
       << ", " << hi << "]; widen search_halfwidth";
    result.warnings.push_back(os.str());
  }
  return result;
}

}  // namespace imuscale
