#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "pivot/types.hpp"

namespace pivot::sim {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double norm_xy() const { return std::sqrt(x * x + y * y); }
  bool operator==(const Vec3&) const = default;
};

struct ObjectState {
  std::string label;
  std::array<std::uint8_t, 3> color{128, 128, 128};
  std::string shape;     // "disc", "can", "carton", ...
  Vec3 position;         // object center; resting height == radius
  Vec3 initial_position; // where reset placed it
  double radius = 0.03;
  bool upright = true;
};

// Axes: +x right, +y front (away from the robot), +z up. The table surface
// is z = 0.
struct WorldState {
  std::vector<ObjectState> objects;
  Vec3 gripper{0.0, -0.35, 0.12};
  Pose6 gripper_pose;  // orientation part used only for rotate primitives
  GripperState gripper_state;
  std::optional<std::string> held;
  double table_height = 0.0;
  std::optional<double> door_angle_deg;  // present only for door tasks
  bool door_engaged = false;             // gripper latched onto the handle
  Vec3 door_handle{0.30, 0.25, 0.10};
  std::int64_t step_count = 0;

  const ObjectState* find(const std::string& label) const;
  ObjectState* find(const std::string& label);
};

enum class Skill {
  PickTarget,
  PlaceTarget,
  MoveANearB,
  OpenDoor,
  CloseDoor,
  PushTargetFront,
  PushTargetAside,
  KnockTargetOver,
};

inline constexpr std::array<Skill, 8> kAllSkills = {
    Skill::PickTarget,     Skill::PlaceTarget,      Skill::MoveANearB,      Skill::OpenDoor,
    Skill::CloseDoor,      Skill::PushTargetFront,  Skill::PushTargetAside, Skill::KnockTargetOver,
};

std::string skill_key(Skill s);
Skill skill_from_key(const std::string& key);

struct TaskSpec {
  Skill skill = Skill::PickTarget;
  std::string target;            // primary object label
  std::string secondary;         // B for MoveANearB, else empty
  std::string aside_direction;   // "left"/"right" for PushTargetAside
  int level = 1;
  int distractors = 0;
};

struct TaskSpec;
struct SimParams {
  double workspace_half_xy = 0.5;   // +-0.5 m square table
  double workspace_height = 0.5;
  double grasp_radius = 0.02;
  double max_step = 0.02;           // |delta| clamp per axis, meters
  double lift_height = 0.10;        // pick success threshold
  double near_distance = 0.10;      // move-near success threshold
  double push_distance = 0.10;      // push success threshold
  double open_angle_deg = 80.0;
  double close_angle_deg = 10.0;
  double door_gain_deg_per_m = 2000.0;
  double handle_radius = 0.05;        // latch-on distance
  double handle_release_radius = 0.15;  // latched motion keeps driving within this
  double min_spacing = 0.12;        // object placement separation
  double knock_contact_height = 0.6;  // fraction of radius above center
  int image_size = 56;
};

// Shared geometry between the rule parser and the scripted expert; both
// must agree on where a push or knock starts.
Vec3 push_direction(Skill skill, const std::string& aside_direction);
Vec3 push_approach_point(Skill skill, const std::string& aside_direction, const ObjectState& target,
                         const SimParams& params);
Vec3 knock_approach_point(const ObjectState& target, const SimParams& params);

}  // namespace pivot::sim
