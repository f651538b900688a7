#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pivot {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Wraps into (-pi, pi]. In-range values are returned unchanged so the
// operation is exactly idempotent.
inline double normalize_angle(double theta) {
  if (theta > -kPi && theta <= kPi) return theta;
  double r = std::fmod(theta + kPi, 2.0 * kPi);
  if (r <= 0.0) r += 2.0 * kPi;
  return r - kPi;
}

struct Pose6 {
  double x = 0.0, y = 0.0, z = 0.0;
  double roll = 0.0, pitch = 0.0, yaw = 0.0;

  Pose6 normalized() const {
    return {x, y, z, normalize_angle(roll), normalize_angle(pitch), normalize_angle(yaw)};
  }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
           std::isfinite(roll) && std::isfinite(pitch) && std::isfinite(yaw);
  }
  bool operator==(const Pose6&) const = default;
};

// 0 = open, 1 = closed.
struct GripperState {
  int value = 0;
  bool valid() const { return value == 0 || value == 1; }
  bool operator==(const GripperState&) const = default;
};

// Per-step end-effector displacement plus gripper command; a 7-vector.
struct Action {
  Pose6 delta;
  GripperState gripper;

  double dim(int i) const {
    switch (i) {
      case 0: return delta.x;
      case 1: return delta.y;
      case 2: return delta.z;
      case 3: return delta.roll;
      case 4: return delta.pitch;
      case 5: return delta.yaw;
      default: return static_cast<double>(gripper.value);
    }
  }
  bool operator==(const Action&) const = default;
};

struct ActionBounds {
  double position = 0.02;  // meters per step
  double angle = 0.10;     // radians per step

  double limit(int dim) const { return dim < 3 ? position : angle; }
  bool contains(const Action& a) const {
    for (int i = 0; i < 6; ++i) {
      if (std::abs(a.dim(i)) > limit(i) + 1e-12) return false;
    }
    return true;
  }
};

struct Observation {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;  // row-major H*W*3
  std::int64_t timestamp = 0;

  bool operator==(const Observation&) const = default;
};

enum class WaypointCause { PrimitiveCompletion, RobotStateChange };

struct PrimitiveRef {
  std::string kind;                  // taxonomy key, e.g. "close_to"
  std::optional<std::string> direction;  // "left"/"right"/"front"/"back"
  std::string target;                // object label, may be empty

  bool operator==(const PrimitiveRef&) const = default;
};

struct WaypointMark {
  std::int64_t step = 0;
  PrimitiveRef primitive;
  WaypointCause cause = WaypointCause::PrimitiveCompletion;

  bool operator==(const WaypointMark&) const = default;
};

struct TrajectoryStep {
  Observation observation;
  Pose6 state;
  GripperState gripper;
  std::optional<Action> action;                 // absent only on the final step
  std::optional<std::int64_t> waypoint_target;  // supervision frame index
  std::optional<PrimitiveRef> primitive_label;

  bool operator==(const TrajectoryStep&) const = default;
};

struct Trajectory {
  std::string instruction;
  int level = 1;
  std::string task;  // skill identifier
  std::vector<TrajectoryStep> steps;
  std::vector<WaypointMark> marks;

  std::int64_t length() const { return static_cast<std::int64_t>(steps.size()); }
  bool operator==(const Trajectory&) const = default;
};

// Oldest-first, exactly h+1 entries.
struct HistoryWindow {
  std::vector<const Observation*> observations;
  std::vector<Pose6> states;
  std::vector<GripperState> grippers;
  int h = 0;
};

// Throws std::invalid_argument naming the offending field.
void validate_trajectory(const Trajectory& traj);

// Steps t-h..t, left-padded by repeating the first frame when t < h.
HistoryWindow history_window(const Trajectory& traj, std::int64_t t, int h);

}  // namespace pivot
