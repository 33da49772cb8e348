#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace arir {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

constexpr double kDefaultSpeedOfSound = 343.0;

/// Unit direction vector with azimuth/zenith accessors.
/// Azimuth is measured from +x towards +y, zenith from +z.
struct Direction {
  Vector3d v{1.0, 0.0, 0.0};

  Direction() = default;
  explicit Direction(const Vector3d& u) : v(u) {
    const double n = v.norm();
    if (std::abs(n - 1.0) > 1e-9) {
      if (n < 1e-300) throw std::invalid_argument("Direction: zero vector");
      v /= n;
    }
  }
  Direction(double x, double y, double z) : Direction(Vector3d(x, y, z)) {}

  static Direction fromAngles(double azimuth, double zenith) {
    return Direction(Vector3d(std::sin(zenith) * std::cos(azimuth),
                              std::sin(zenith) * std::sin(azimuth),
                              std::cos(zenith)));
  }

  // azimuth convention at the poles: 0 when x = y = 0
  double azimuth() const {
    if (v.x() == 0.0 && v.y() == 0.0) return 0.0;
    return std::atan2(v.y(), v.x());
  }
  double zenith() const { return std::acos(std::clamp(v.z(), -1.0, 1.0)); }
};

/// One Ambisonic room impulse response: (N+1)^2 ACN-ordered, N3D-normalized
/// SH channels by T samples, with its capture position.
struct Arir {
  MatrixXd channels;  // (order+1)^2 x T
  int order = 0;
  double sample_rate = 44100.0;
  Vector3d position = Vector3d::Zero();
  bool delay_compensated = false;

  long length() const { return channels.cols(); }
  int num_channels() const { return static_cast<int>(channels.rows()); }

  void validate() const {
    if (order < 0) throw std::invalid_argument("Arir: negative order");
    const int want = (order + 1) * (order + 1);
    if (num_channels() != want)
      throw std::invalid_argument("Arir: channel count " +
                                  std::to_string(num_channels()) +
                                  " does not match order " + std::to_string(order));
  }

  // Zeroth-order omnidirectional channel.
  Eigen::RowVectorXd omni() const { return channels.row(0); }
};

/// Horizontal equidistant square grid of ARIRs.
struct ArirGrid {
  std::vector<Arir> arirs;
  double spacing = 2.0;             // r
  double plane_height = 0.0;        // z_i
  double speed_of_sound = kDefaultSpeedOfSound;

  int size() const { return static_cast<int>(arirs.size()); }

  void validate() const {
    if (arirs.empty()) throw std::invalid_argument("ArirGrid: empty");
    const auto& a0 = arirs.front();
    for (const auto& a : arirs) {
      a.validate();
      if (a.order != a0.order || a.sample_rate != a0.sample_rate ||
          a.length() != a0.length())
        throw std::invalid_argument("ArirGrid: mismatched ARIR format");
      if (std::abs(a.position.z() - plane_height) > 1e-3)
        throw std::invalid_argument("ArirGrid: position off the grid plane");
    }
  }
};

/// Rendering target: translation plus intrinsic yaw/pitch/roll head rotation.
struct ListenerPose {
  Vector3d position = Vector3d::Zero();
  Vector3d yaw_pitch_roll = Vector3d::Zero();

  bool has_rotation() const { return yaw_pitch_roll.norm() > 0.0; }
};

/// Time-varying DOA estimate; samples with vanishing intensity are invalid.
struct DoaTrajectory {
  std::vector<Vector3d> directions;
  std::vector<bool> validity;

  long size() const { return static_cast<long>(directions.size()); }
};

/// Nonnegative short-time directional magnitude.
struct Envelope {
  VectorXd values;

  long size() const { return values.size(); }
};

struct Peak {
  double toa = 0.0;        // seconds, on the (delay-compensated) ARIR time axis
  Direction doa;
  double magnitude = 0.0;  // envelope value at the peak
  int perspective = -1;    // grid index
};

enum class EventKind { direct, triplet, instantaneous };

struct SoundEvent {
  Vector3d position = Vector3d::Zero();
  double angular_cost = 0.0;
  double ls_cost = 0.0;
  EventKind kind = EventKind::triplet;
};

struct PeakMatch {
  int index = 0;                 // m; 1 is the direct sound
  std::array<Peak, 3> peaks{};   // one per triplet perspective
  int reference = 0;             // triplet-local index of the reference peak
  SoundEvent event;
  double cost = 0.0;             // J = J_ang + J_amp
};

}  // namespace arir
