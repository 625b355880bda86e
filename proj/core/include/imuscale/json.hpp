#pragma once

#include <nlohmann/json.hpp>

#include "imuscale/types.hpp"

namespace imuscale {

inline nlohmann::json vec_to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

/// Row-major nested arrays.
inline nlohmann::json mat_to_json(const Mat3& m) {
  auto rows = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return rows;
}

inline Mat3 mat_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3x3 array");
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    if (!j.at(i).is_array() || j.at(i).size() != 3) throw std::invalid_argument("expected a 3x3 array");
    for (int k = 0; k < 3; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

/// [x, y, z, w], matching the trajectory file column order.
inline nlohmann::json quat_to_json(const Quat& q) { return nlohmann::json::array({q.x(), q.y(), q.z(), q.w()}); }

inline Quat quat_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("expected a 4-element quaternion");
  return Quat(j.at(3).get<double>(), j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

}  // namespace imuscale
