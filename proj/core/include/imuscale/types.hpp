#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace imuscale {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Vec3List = std::vector<Vec3>;
using RotationSequence = std::vector<Mat3>;

/// Uniform sampling grid: sample k sits at t0 + k / rate.
struct TimeBase {
  double t0 = 0.0;
  double rate = 1.0;
  std::size_t size = 0;

  double time(std::size_t k) const { return t0 + static_cast<double>(k) / rate; }
  double dt() const { return 1.0 / rate; }
  double last() const { return size == 0 ? t0 : time(size - 1); }
};

struct ScalarSeries {
  TimeBase base;
  std::vector<double> values;
};

struct Vec3Series {
  TimeBase base;
  Vec3List values;
};

/// Camera poses on a uniform grid. Orientations are world-to-camera rotations.
struct PoseSeries {
  TimeBase base;
  Vec3List positions;
  std::vector<Quat> orientations;
};

struct ImuSeries {
  TimeBase base;
  Vec3List gyro;
  Vec3List accel;
};

/// Processing stage a failure belongs to. Mirrors the CLI exit codes.
enum class Stage { Config, Ingest, Alignment, Smoothing, Scale, Evaluation };

inline const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::Config: return "config";
    case Stage::Ingest: return "ingest";
    case Stage::Alignment: return "alignment";
    case Stage::Smoothing: return "smoothing";
    case Stage::Scale: return "scale";
    case Stage::Evaluation: return "evaluation";
  }
  return "unknown";
}

/// Error tagged with the pipeline stage that raised it and a remedy hint.
class Error : public std::runtime_error {
 public:
  Error(Stage stage, const std::string& message, std::string hint = {})
      : std::runtime_error(std::string("[") + stage_name(stage) + "] " + message),
        stage_(stage),
        hint_(std::move(hint)) {}

  Stage stage() const { return stage_; }
  const std::string& hint() const { return hint_; }

 private:
  Stage stage_;
  std::string hint_;
};

/// Collected non-fatal warnings. Functions that may emit diagnostics take an
/// optional pointer to one of these.
using Diagnostics = std::vector<std::string>;

inline void emit(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->push_back(std::move(message));
}

}  // namespace imuscale
