#include "pivot/primitives.hpp"

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>
#include <sstream>

namespace pivot::prim {

using nlohmann::json;
using sim::Skill;
using sim::TaskSpec;
using sim::WorldState;

std::string kind_key(Kind k) {
  switch (k) {
    case Kind::CloseTo: return "close_to";
    case Kind::Grasp: return "grasp";
    case Kind::MoveUp: return "move_up";
    case Kind::MoveDown: return "move_down";
    case Kind::Release: return "release";
    case Kind::Rotate: return "rotate";
    case Kind::Push: return "push";
    case Kind::Pull: return "pull";
    case Kind::Open: return "open";
    case Kind::Close: return "close";
  }
  throw std::invalid_argument("unknown primitive kind");
}

Kind kind_from_key(const std::string& key) {
  for (Kind k : kAllKinds) {
    if (kind_key(k) == key) return k;
  }
  throw std::invalid_argument("unknown primitive kind '" + key + "'");
}

std::string direction_key(Direction d) {
  switch (d) {
    case Direction::Left: return "left";
    case Direction::Right: return "right";
    case Direction::Front: return "front";
    case Direction::Back: return "back";
  }
  throw std::invalid_argument("unknown direction");
}

Direction direction_from_key(const std::string& key) {
  if (key == "left") return Direction::Left;
  if (key == "right") return Direction::Right;
  if (key == "front") return Direction::Front;
  if (key == "back") return Direction::Back;
  throw std::invalid_argument("unknown direction '" + key + "'");
}

bool direction_allowed(Kind k) {
  return k == Kind::Rotate || k == Kind::Push || k == Kind::Pull;
}

void validate(const PrimitiveAction& p) {
  if (p.direction && !direction_allowed(p.kind)) {
    throw std::invalid_argument("direction is only valid for rotate/push/pull");
  }
}

namespace {

const char* description(Kind k) {
  switch (k) {
    case Kind::CloseTo: return "move close to the target object";
    case Kind::Grasp: return "hold or pick up the target object";
    case Kind::MoveUp: return "lift the target object upwards";
    case Kind::MoveDown: return "lower the target object downwards";
    case Kind::Release: return "let go of or put down the target object";
    case Kind::Rotate: return "turn the target object";
    case Kind::Push: return "push the target object";
    case Kind::Pull: return "pull the target object";
    case Kind::Open: return "open an object, such as a door or container";
    case Kind::Close: return "close an object, such as a door or container";
  }
  return "";
}

}  // namespace

std::string primitive_text(const PrimitiveAction& p) {
  std::string text = description(p.kind);
  if (p.direction) text += " " + direction_key(*p.direction);
  if (!p.target.empty()) text += " " + p.target;
  return text;
}

PrimitiveRef to_ref(const PrimitiveAction& p) {
  PrimitiveRef r;
  r.kind = kind_key(p.kind);
  if (p.direction) r.direction = direction_key(*p.direction);
  r.target = p.target;
  return r;
}

PrimitiveAction from_ref(const PrimitiveRef& r) {
  PrimitiveAction p;
  p.kind = kind_from_key(r.kind);
  if (r.direction) p.direction = direction_from_key(*r.direction);
  p.target = r.target;
  validate(p);
  return p;
}

// ------------------------------------------------------------- rule parser

namespace {

constexpr double kApproachTolerance = 0.03;
constexpr double kSettleClearance = 0.005;

double clearance(const sim::ObjectState& o) { return o.position.z - o.radius; }

bool near_point(const sim::Vec3& g, const sim::Vec3& p, double tol) {
  return (g - p).norm() <= tol;
}

PrimitiveAction make(Kind k, std::string target, std::optional<Direction> dir = std::nullopt) {
  PrimitiveAction p;
  p.kind = k;
  p.direction = dir;
  p.target = std::move(target);
  return p;
}

// Pushing stays active while the gripper sits behind the object, roughly on
// the push axis and at contact height; a point test would flap as contact
// resolution nudges the object around.
bool in_push_zone(const sim::Vec3& g, const sim::ObjectState& target, const sim::Vec3& dir,
                  double contact_z) {
  const sim::Vec3 og = target.position - g;
  const double along = og.x * dir.x + og.y * dir.y;
  const double lateral = std::abs(og.x * dir.y - og.y * dir.x);
  return along >= 0.0 && along <= 0.08 && lateral <= 0.035 && std::abs(g.z - contact_z) <= 0.035;
}

}  // namespace

PrimitiveAction parse_primitive_rule(const TaskSpec& task, const WorldState& world) {
  const sim::SimParams params;  // thresholds shared with the simulator defaults
  const auto& g = world.gripper;

  auto require_object = [&](const std::string& label) -> const sim::ObjectState& {
    const auto* o = world.find(label);
    if (!o) throw std::invalid_argument("rule parser: object '" + label + "' not in world");
    return *o;
  };

  switch (task.skill) {
    case Skill::PickTarget: {
      const auto& t = require_object(task.target);
      if (world.held == task.target) return make(Kind::MoveUp, task.target);
      if (near_point(g, t.position, params.grasp_radius)) return make(Kind::Grasp, task.target);
      return make(Kind::CloseTo, task.target);
    }

    case Skill::PlaceTarget: {
      const auto& t = require_object(task.target);
      if (world.held == task.target) {
        if (clearance(t) > kSettleClearance) return make(Kind::MoveDown, task.target);
        return make(Kind::Release, task.target);
      }
      return make(Kind::Release, task.target);
    }

    case Skill::MoveANearB: {
      const auto& a = require_object(task.target);
      const auto& b = require_object(task.secondary);
      const bool moved = (a.position - a.initial_position).norm() > 0.01;
      const bool near_b = (a.position - b.position).norm() < params.near_distance;
      if (world.held != task.target && moved && near_b) return make(Kind::Release, task.target);
      if (world.held == task.target) {
        const double horiz = (a.position - b.position).norm_xy();
        if (horiz > params.near_distance * 0.6) {
          if (clearance(a) < 0.08) return make(Kind::MoveUp, task.target);
          return make(Kind::CloseTo, task.secondary);
        }
        if (clearance(a) > kSettleClearance) return make(Kind::MoveDown, task.target);
        return make(Kind::Release, task.target);
      }
      if (near_point(g, a.position, params.grasp_radius)) return make(Kind::Grasp, task.target);
      return make(Kind::CloseTo, task.target);
    }

    case Skill::OpenDoor: {
      if (!world.door_angle_deg) throw std::invalid_argument("rule parser: no door in world");
      if (*world.door_angle_deg > params.open_angle_deg) return make(Kind::Open, "door");
      if (world.door_engaged || near_point(g, world.door_handle, params.handle_radius)) {
        return make(Kind::Open, "door");
      }
      return make(Kind::CloseTo, "door");
    }

    case Skill::CloseDoor: {
      if (!world.door_angle_deg) throw std::invalid_argument("rule parser: no door in world");
      if (*world.door_angle_deg < params.close_angle_deg) return make(Kind::Close, "door");
      if (world.door_engaged || near_point(g, world.door_handle, params.handle_radius)) {
        return make(Kind::Close, "door");
      }
      return make(Kind::CloseTo, "door");
    }

    case Skill::PushTargetFront:
    case Skill::PushTargetAside: {
      const auto& t = require_object(task.target);
      const sim::Vec3 dir = sim::push_direction(task.skill, task.aside_direction);
      const std::optional<Direction> pdir =
          task.skill == Skill::PushTargetFront
              ? std::optional<Direction>{Direction::Front}
              : std::optional<Direction>{task.aside_direction == "left" ? Direction::Left
                                                                        : Direction::Right};
      const sim::Vec3 disp = t.position - t.initial_position;
      const double along = disp.x * dir.x + disp.y * dir.y;
      if (along >= params.push_distance) return make(Kind::Push, task.target, pdir);
      if (in_push_zone(g, t, dir, t.position.z)) return make(Kind::Push, task.target, pdir);
      return make(Kind::CloseTo, task.target);
    }

    case Skill::KnockTargetOver: {
      const auto& t = require_object(task.target);
      if (!t.upright) return make(Kind::Push, task.target);
      const double contact_z = t.position.z + params.knock_contact_height * t.radius;
      if (in_push_zone(g, t, {0.0, 1.0, 0.0}, contact_z)) return make(Kind::Push, task.target);
      return make(Kind::CloseTo, task.target);
    }
  }
  throw std::invalid_argument("rule parser: unknown skill");
}

// --------------------------------------------------------- output parsing

namespace {

std::string normalize_phrase(const std::string& s) {
  std::string out;
  bool space = false;
  for (char ch : s) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      if (space && !out.empty()) out.push_back(' ');
      space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      space = true;
    }
  }
  return out;
}

struct Synonym {
  const char* phrase;
  Kind kind;
};

// Bridges the dialogue vocabulary ("move to", "clamp", "screw", ...) and the
// taxonomy's own names. Longest phrase wins.
constexpr Synonym kSynonyms[] = {
    {"move close to", Kind::CloseTo},
    {"get close to", Kind::CloseTo},
    {"move closer to", Kind::CloseTo},
    {"close to", Kind::CloseTo},
    {"move to", Kind::CloseTo},
    {"approach", Kind::CloseTo},
    {"pick up", Kind::Grasp},
    {"clamp", Kind::Grasp},
    {"grasp", Kind::Grasp},
    {"grab", Kind::Grasp},
    {"hold", Kind::Grasp},
    {"move up", Kind::MoveUp},
    {"lift", Kind::MoveUp},
    {"raise", Kind::MoveUp},
    {"move down", Kind::MoveDown},
    {"lower", Kind::MoveDown},
    {"put down", Kind::Release},
    {"let go", Kind::Release},
    {"unclamp", Kind::Release},
    {"release", Kind::Release},
    {"screw", Kind::Rotate},
    {"rotate", Kind::Rotate},
    {"turn", Kind::Rotate},
    {"push", Kind::Push},
    {"pull", Kind::Pull},
    {"open", Kind::Open},
    {"close", Kind::Close},
};

}  // namespace

std::pair<Kind, std::optional<Direction>> map_action_phrase(const std::string& phrase) {
  const std::string norm = normalize_phrase(phrase);
  if (norm.empty()) throw ParseError("empty action phrase", phrase);

  const Synonym* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& syn : kSynonyms) {
    const std::size_t len = std::char_traits<char>::length(syn.phrase);
    if (len <= best_len) continue;
    if (norm == syn.phrase ||
        (norm.size() > len && norm.compare(0, len, syn.phrase) == 0 && norm[len] == ' ')) {
      best = &syn;
      best_len = len;
    }
  }
  if (!best) throw ParseError("unmappable action phrase '" + phrase + "'", phrase);

  std::optional<Direction> dir;
  if (norm.size() > best_len) {
    const std::string rest = norm.substr(best_len + 1);
    if (!direction_allowed(best->kind)) {
      throw ParseError("trailing words after non-directional action '" + phrase + "'", phrase);
    }
    try {
      dir = direction_from_key(rest);
    } catch (const std::invalid_argument&) {
      throw ParseError("bad direction '" + rest + "' in '" + phrase + "'", phrase);
    }
  }
  return {best->kind, dir};
}

PrimitiveAction parse_vlm_output(const std::string& text) {
  // Scan for balanced candidate objects and take the first one that parses
  // as JSON and carries a do_action block.
  for (std::size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '{') continue;
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          const std::string candidate = text.substr(start, i - start + 1);
          json j = json::parse(candidate, nullptr, false);
          if (j.is_discarded() || !j.is_object() || !j.contains("do_action")) break;
          const json& da = j["do_action"];
          if (!da.is_object() || !da.contains("action")) {
            throw ParseError("do_action block missing 'action'", text);
          }
          auto [kind, dir] = map_action_phrase(da["action"].get<std::string>());
          PrimitiveAction p;
          p.kind = kind;
          p.direction = dir;
          if (da.contains("target") && da["target"].is_string()) {
            p.target = da["target"].get<std::string>();
          }
          validate(p);
          return p;
        }
      }
    }
  }
  throw ParseError("no do_action object found", text);
}

std::string render_canonical_response(const PrimitiveAction& p) {
  std::string name;
  switch (p.kind) {
    case Kind::CloseTo: name = "close to"; break;
    case Kind::Grasp: name = "grasp"; break;
    case Kind::MoveUp: name = "move up"; break;
    case Kind::MoveDown: name = "move down"; break;
    case Kind::Release: name = "release"; break;
    case Kind::Rotate: name = "rotate"; break;
    case Kind::Push: name = "push"; break;
    case Kind::Pull: name = "pull"; break;
    case Kind::Open: name = "open"; break;
    case Kind::Close: name = "close"; break;
  }
  if (p.direction) name += " " + direction_key(*p.direction);
  json j{{"do_action", json{{"action", name}, {"target", p.target}}}};
  return j.dump(4);
}

}  // namespace pivot::prim
