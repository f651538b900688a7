#include "pivot/world.hpp"

#include <stdexcept>

namespace pivot::sim {

const ObjectState* WorldState::find(const std::string& label) const {
  for (const auto& o : objects) {
    if (o.label == label) return &o;
  }
  return nullptr;
}

ObjectState* WorldState::find(const std::string& label) {
  for (auto& o : objects) {
    if (o.label == label) return &o;
  }
  return nullptr;
}

std::string skill_key(Skill s) {
  switch (s) {
    case Skill::PickTarget: return "pick_target";
    case Skill::PlaceTarget: return "place_target";
    case Skill::MoveANearB: return "move_a_near_b";
    case Skill::OpenDoor: return "open_door";
    case Skill::CloseDoor: return "close_door";
    case Skill::PushTargetFront: return "push_target_front";
    case Skill::PushTargetAside: return "push_target_aside";
    case Skill::KnockTargetOver: return "knock_target_over";
  }
  throw std::invalid_argument("unknown skill");
}

Skill skill_from_key(const std::string& key) {
  for (Skill s : kAllSkills) {
    if (skill_key(s) == key) return s;
  }
  throw std::invalid_argument("unknown skill '" + key + "'");
}

Vec3 push_direction(Skill skill, const std::string& aside_direction) {
  if (skill == Skill::PushTargetFront) return {0.0, 1.0, 0.0};
  return aside_direction == "left" ? Vec3{-1.0, 0.0, 0.0} : Vec3{1.0, 0.0, 0.0};
}

Vec3 push_approach_point(Skill skill, const std::string& aside_direction,
                         const ObjectState& target, const SimParams& params) {
  const Vec3 dir = push_direction(skill, aside_direction);
  Vec3 p = target.position - dir * (target.radius + params.grasp_radius + 0.005);
  p.z = target.position.z;
  return p;
}

Vec3 knock_approach_point(const ObjectState& target, const SimParams& params) {
  Vec3 p = target.position - Vec3{0.0, 1.0, 0.0} * (target.radius + params.grasp_radius + 0.005);
  p.z = target.position.z + params.knock_contact_height * target.radius;
  return p;
}

}  // namespace pivot::sim
