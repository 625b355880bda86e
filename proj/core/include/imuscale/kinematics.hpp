#pragma once

#include <span>
#include <vector>

#include "imuscale/types.hpp"

namespace imuscale {

RotationSequence to_rotation_matrices(std::span<const Quat> orientations);

Mat3 skew(const Vec3& v);
/// Axial vector of the antisymmetric part of `m`.
Vec3 vee(const Mat3& m);

struct RotationDerivative {
  Vec3List omega;                    // vee of antisymmetrized dR/dt * R^T
  std::vector<double> symmetric_norm;  // Frobenius norm of the discarded symmetric part
};

/// Differentiates a rotation sequence: central differences inside, second-order
/// one-sided stencils at the ends, then projects dR/dt * R^T onto skew matrices.
RotationDerivative differentiate_rotations(std::span<const Mat3> rotations, double rate);

/// omega with [omega]_x = dR/dt * R^T, one vector per input rotation.
Vec3List angular_velocity(std::span<const Mat3> rotations, double rate);

/// Camera-frame body rate for world-to-camera rotations R: [w]_x = R * dR^T/dt,
/// which is the negative of angular_velocity(). This is what a gyroscope rigidly
/// attached to the camera reads (up to the sensor-to-camera rotation).
Vec3List camera_body_rate(std::span<const Mat3> rotations, double rate);

/// out[k] = R[k] * v
Vec3List rotate_world_to_camera(std::span<const Mat3> rotations, const Vec3& v);
/// out[k] = R[k] * v[k]
Vec3List rotate_world_to_camera(std::span<const Mat3> rotations, std::span<const Vec3> v);

/// Distance of `r` from the rotation group: ||R R^T - I||_F, and +inf if det < 0.
double orthogonality_error(const Mat3& r);

/// out[k] = R_S * in[k]. Throws if R_S is not a proper rotation (tolerance 1e-6).
Vec3List rotate_sensor_to_camera(const Mat3& sensor_to_camera, std::span<const Vec3> series);

/// Nearest proper rotation in the Frobenius sense.
Mat3 project_to_rotation(const Mat3& m);

/// Angle of the relative rotation a^T b, in radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

}  // namespace imuscale
