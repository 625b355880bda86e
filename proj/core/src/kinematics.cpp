#include "imuscale/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/SVD>

namespace imuscale {

RotationSequence to_rotation_matrices(std::span<const Quat> orientations) {
  RotationSequence out;
  out.reserve(orientations.size());
  for (const auto& q : orientations) out.push_back(q.normalized().toRotationMatrix());
  return out;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  const Mat3 a = 0.5 * (m - m.transpose());
  return Vec3(a(2, 1), a(0, 2), a(1, 0));
}

RotationDerivative differentiate_rotations(std::span<const Mat3> rotations, double rate) {
  const std::size_t n = rotations.size();
  if (n < 3) throw std::invalid_argument("angular_velocity: need at least 3 rotations");
  if (!(rate > 0.0)) throw std::invalid_argument("angular_velocity: rate must be positive");

  RotationDerivative out;
  out.omega.resize(n);
  out.symmetric_norm.resize(n);
  const double half_rate = 0.5 * rate;
  for (std::size_t k = 0; k < n; ++k) {
    Mat3 dr;
    if (k == 0) {
      dr = (-3.0 * rotations[0] + 4.0 * rotations[1] - rotations[2]) * half_rate;
    } else if (k == n - 1) {
      dr = (3.0 * rotations[n - 1] - 4.0 * rotations[n - 2] + rotations[n - 3]) * half_rate;
    } else {
      dr = (rotations[k + 1] - rotations[k - 1]) * half_rate;
    }
    const Mat3 m = dr * rotations[k].transpose();
    out.omega[k] = vee(m);
    out.symmetric_norm[k] = (0.5 * (m + m.transpose())).norm();
  }
  return out;
}

Vec3List angular_velocity(std::span<const Mat3> rotations, double rate) {
  return differentiate_rotations(rotations, rate).omega;
}

Vec3List camera_body_rate(std::span<const Mat3> rotations, double rate) {
  auto omega = angular_velocity(rotations, rate);
  for (auto& w : omega) w = -w;
  return omega;
}

Vec3List rotate_world_to_camera(std::span<const Mat3> rotations, const Vec3& v) {
  Vec3List out;
  out.reserve(rotations.size());
  for (const auto& r : rotations) out.push_back(r * v);
  return out;
}

Vec3List rotate_world_to_camera(std::span<const Mat3> rotations, std::span<const Vec3> v) {
  if (rotations.size() != v.size()) {
    throw std::invalid_argument("rotate_world_to_camera: length mismatch (" +
                                std::to_string(rotations.size()) + " rotations, " +
                                std::to_string(v.size()) + " vectors)");
  }
  Vec3List out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = rotations[k] * v[k];
  return out;
}

double orthogonality_error(const Mat3& r) {
  if (r.determinant() <= 0.0) return std::numeric_limits<double>::infinity();
  return (r * r.transpose() - Mat3::Identity()).norm();
}

Vec3List rotate_sensor_to_camera(const Mat3& sensor_to_camera, std::span<const Vec3> series) {
  const double err = orthogonality_error(sensor_to_camera);
  if (err > 1e-6) {
    throw std::invalid_argument("rotate_sensor_to_camera: R_S is not a proper rotation (error " +
                                std::to_string(err) + ")");
  }
  Vec3List out(series.size());
  for (std::size_t k = 0; k < series.size(); ++k) out[k] = sensor_to_camera * series[k];
  return out;
}

Mat3 project_to_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 rel = a.transpose() * b;
  const double c = std::clamp(0.5 * (rel.trace() - 1.0), -1.0, 1.0);
  // acos loses precision near zero; use the axial vector there.
  const double s = vee(rel).norm();
  return std::atan2(s, c);
}

}  // namespace imuscale
