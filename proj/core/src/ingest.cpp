#include "imuscale/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace imuscale {
namespace {

constexpr double kTimeEps = 1e-9;

std::string location(std::string_view source, std::size_t line) {
  std::ostringstream os;
  os << source << ":" << line;
  return os.str();
}

bool parse_double(std::string_view token, double& value) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r'))
    token.remove_suffix(1);
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Stage::Ingest, "cannot open '" + path.string() + "'", "check the input path");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void put_number(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

template <typename Sample>
double rate_of(std::span<const Sample> samples) {
  if (samples.size() < 2) throw std::invalid_argument("need at least two samples to infer a rate");
  const double span = samples.back().t - samples.front().t;
  if (!(span > 0.0)) throw std::invalid_argument("zero-length time span");
  return static_cast<double>(samples.size() - 1) / span;
}

}  // namespace

std::vector<PoseSample> parse_trajectory(std::istream& in, std::string_view source) {
  std::vector<PoseSample> poses;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (blank(view)) continue;
    auto first = view.find_first_not_of(" \t");
    if (view[first] == '#') continue;

    auto fields = split_whitespace(view);
    if (fields.size() != 8) {
      throw Error(Stage::Ingest,
                  location(source, lineno) + ": expected 8 fields (t x y z qx qy qz qw), got " +
                      std::to_string(fields.size()));
    }
    double v[8];
    for (int i = 0; i < 8; ++i) {
      if (!parse_double(fields[i], v[i]) || !std::isfinite(v[i])) {
        throw Error(Stage::Ingest, location(source, lineno) + ": malformed number '" +
                                       std::string(fields[i]) + "'");
      }
    }
    Quat q(v[7], v[4], v[5], v[6]);
    const double norm = q.norm();
    if (norm < 1e-6) throw Error(Stage::Ingest, location(source, lineno) + ": zero quaternion");
    q.coeffs() /= norm;

    if (!poses.empty()) {
      if (v[0] == poses.back().t) {
        throw Error(Stage::Ingest, location(source, lineno) + ": duplicate timestamp " +
                                       std::to_string(v[0]));
      }
      if (v[0] < poses.back().t) {
        throw Error(Stage::Ingest, location(source, lineno) + ": non-monotonic timestamp " +
                                       std::to_string(v[0]));
      }
    }
    poses.push_back({v[0], Vec3(v[1], v[2], v[3]), q});
  }
  if (poses.size() < kMinTrajectorySamples) {
    throw Error(Stage::Ingest, std::string(source) + ": trajectory has " +
                                   std::to_string(poses.size()) + " poses, need at least " +
                                   std::to_string(kMinTrajectorySamples));
  }
  return poses;
}

std::vector<PoseSample> parse_trajectory(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_trajectory(in, path.string());
}

void write_trajectory(std::ostream& out, std::span<const PoseSample> poses) {
  out << "# t x y z qx qy qz qw\n";
  for (const auto& p : poses) {
    const double fields[8] = {p.t,
                              p.position.x(),
                              p.position.y(),
                              p.position.z(),
                              p.orientation.x(),
                              p.orientation.y(),
                              p.orientation.z(),
                              p.orientation.w()};
    for (int i = 0; i < 8; ++i) {
      if (i) out << ' ';
      put_number(out, fields[i]);
    }
    out << '\n';
  }
}

void write_trajectory(const std::filesystem::path& path, std::span<const PoseSample> poses) {
  auto out = open_output(path);
  write_trajectory(out, poses);
}

std::vector<ImuSample> parse_imu(std::istream& in, std::string_view source) {
  std::vector<ImuSample> samples;
  std::string line;
  std::size_t lineno = 0;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (blank(view)) continue;
    auto fields = split_commas(view);

    double v[7];
    if (first_record) {
      first_record = false;
      double probe;
      if (!parse_double(fields[0], probe)) continue;  // header row
    }
    if (fields.size() != 7) {
      throw Error(Stage::Ingest, location(source, lineno) +
                                     ": expected 7 comma-separated fields (t,gx,gy,gz,ax,ay,az), got " +
                                     std::to_string(fields.size()));
    }
    for (int i = 0; i < 7; ++i) {
      if (!parse_double(fields[i], v[i])) {
        throw Error(Stage::Ingest, location(source, lineno) + ": malformed number '" +
                                       std::string(fields[i]) + "'");
      }
      if (!std::isfinite(v[i])) {
        throw Error(Stage::Ingest, location(source, lineno) + ": non-finite value in column " +
                                       std::to_string(i + 1));
      }
    }
    ImuSample s{v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])};
    if (s.accel.norm() >= kMaxAccelNorm) {
      throw Error(Stage::Ingest, location(source, lineno) + ": accelerometer magnitude " +
                                     std::to_string(s.accel.norm()) + " m/s^2 exceeds sanity bound");
    }
    samples.push_back(s);
  }
  if (samples.empty()) throw Error(Stage::Ingest, std::string(source) + ": no IMU samples");

  std::stable_sort(samples.begin(), samples.end(),
                   [](const ImuSample& a, const ImuSample& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].t == samples[i - 1].t) {
      throw Error(Stage::Ingest, std::string(source) + ": duplicate IMU timestamp " +
                                     std::to_string(samples[i].t));
    }
  }
  return samples;
}

std::vector<ImuSample> parse_imu(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_imu(in, path.string());
}

void write_imu(std::ostream& out, std::span<const ImuSample> samples) {
  out << "t,gx,gy,gz,ax,ay,az\n";
  for (const auto& s : samples) {
    const double fields[7] = {s.t,         s.gyro.x(),  s.gyro.y(), s.gyro.z(),
                              s.accel.x(), s.accel.y(), s.accel.z()};
    for (int i = 0; i < 7; ++i) {
      if (i) out << ',';
      put_number(out, fields[i]);
    }
    out << '\n';
  }
}

void write_imu(const std::filesystem::path& path, std::span<const ImuSample> samples) {
  auto out = open_output(path);
  write_imu(out, samples);
}

double shift_clock_origin(std::vector<PoseSample>& poses, std::vector<ImuSample>& imu) {
  if (poses.empty()) return 0.0;
  const double origin = poses.front().t;
  for (auto& p : poses) p.t -= origin;
  for (auto& s : imu) s.t -= origin;
  return origin;
}

double nominal_rate(std::span<const ImuSample> samples) { return rate_of(samples); }
double nominal_rate(std::span<const PoseSample> poses) { return rate_of(poses); }

Quat slerp_shortest(const Quat& a, const Quat& b, double u) {
  Quat target = b;
  if (a.dot(b) < 0.0) target.coeffs() = -b.coeffs();
  Quat q = a.slerp(u, target);
  q.normalize();
  return q;
}

PoseSeries resample_poses(std::span<const PoseSample> poses, double rate, Diagnostics* diag) {
  if (poses.size() < 2) throw std::invalid_argument("resample_poses: need at least two poses");
  if (!(rate > 0.0)) throw std::invalid_argument("resample_poses: rate must be positive");

  const double t_first = poses.front().t;
  const double span = poses.back().t - t_first;
  if (!(span > 0.0)) throw std::invalid_argument("resample_poses: poses must span positive time");

  std::vector<double> intervals;
  intervals.reserve(poses.size() - 1);
  for (std::size_t i = 1; i < poses.size(); ++i) intervals.push_back(poses[i].t - poses[i - 1].t);
  auto sorted = intervals;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  const auto irregular = std::count_if(intervals.begin(), intervals.end(), [&](double dt) {
    return std::abs(dt - median) > 0.25 * median;
  });
  if (irregular > 0) {
    emit(diag, "resample_poses: " + std::to_string(irregular) +
                   " frame intervals deviate more than 25% from the median " +
                   std::to_string(median) + " s");
  }
  if (rate < 1.0 / median) {
    emit(diag, "resample_poses: requested rate " + std::to_string(rate) +
                   " Hz is below the pose rate; downsampling");
  }

  PoseSeries out;
  out.base.t0 = t_first;
  out.base.rate = rate;
  out.base.size = static_cast<std::size_t>(std::floor(span * rate + kTimeEps)) + 1;
  out.positions.resize(out.base.size);
  out.orientations.resize(out.base.size);

  std::size_t seg = 0;
  for (std::size_t k = 0; k < out.base.size; ++k) {
    const double t = out.base.time(k);
    while (seg + 2 < poses.size() && poses[seg + 1].t <= t) ++seg;
    const auto& a = poses[seg];
    const auto& b = poses[seg + 1];
    const double u = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
    out.positions[k] = (1.0 - u) * a.position + u * b.position;
    out.orientations[k] = slerp_shortest(a.orientation, b.orientation, u);
  }
  return out;
}

ImuSeries resample_imu(std::span<const ImuSample> samples, const TimeBase& grid) {
  if (samples.empty()) throw std::invalid_argument("resample_imu: no samples");
  const double first = samples.front().t;
  const double last = samples.back().t;
  if (grid.size > 0 && (grid.t0 < first - kTimeEps || grid.last() > last + kTimeEps)) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << "grid interval [" << grid.t0 << ", " << grid.last()
       << "] s is not covered by IMU data [" << first << ", " << last << "] s; uncovered: ";
    if (grid.t0 < first - kTimeEps) os << "[" << grid.t0 << ", " << first << ")";
    if (grid.last() > last + kTimeEps) {
      if (grid.t0 < first - kTimeEps) os << " and ";
      os << "(" << last << ", " << grid.last() << "]";
    }
    throw Error(Stage::Ingest, os.str(), "record IMU data over the whole camera sequence");
  }

  ImuSeries out;
  out.base = grid;
  out.gyro.resize(grid.size);
  out.accel.resize(grid.size);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < grid.size; ++k) {
    const double t = grid.time(k);
    if (samples.size() == 1) {
      out.gyro[k] = samples[0].gyro;
      out.accel[k] = samples[0].accel;
      continue;
    }
    while (seg + 2 < samples.size() && samples[seg + 1].t <= t) ++seg;
    const auto& a = samples[seg];
    const auto& b = samples[seg + 1];
    const double u = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
    out.gyro[k] = (1.0 - u) * a.gyro + u * b.gyro;
    out.accel[k] = (1.0 - u) * a.accel + u * b.accel;
  }
  return out;
}

namespace {

template <typename T>
T interpolate_uniform(const TimeBase& base, const std::vector<T>& values, double t) {
  if (values.empty()) throw std::invalid_argument("sample_linear: empty series");
  const double x = (t - base.t0) * base.rate;
  const double max_index = static_cast<double>(values.size() - 1);
  if (x < -kTimeEps * base.rate || x > max_index + kTimeEps * base.rate) {
    throw std::out_of_range("sample_linear: time " + std::to_string(t) + " outside series span");
  }
  const double clamped = std::clamp(x, 0.0, max_index);
  auto i = static_cast<std::size_t>(std::floor(clamped));
  if (i + 1 >= values.size()) return values.back();
  const double u = clamped - static_cast<double>(i);
  return (1.0 - u) * values[i] + u * values[i + 1];
}

}  // namespace

Vec3 sample_linear(const Vec3Series& series, double t) {
  return interpolate_uniform(series.base, series.values, t);
}

double sample_linear(const ScalarSeries& series, double t) {
  return interpolate_uniform(series.base, series.values, t);
}

}  // namespace imuscale
