#include "pivot/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pivot/primitives.hpp"
#include "pivot/rng.hpp"
#include "pivot/waypoints.hpp"

namespace pivot::sim {

// ---------------------------------------------------------------- catalog

const std::vector<CatalogEntry>& object_catalog() {
  static const std::vector<CatalogEntry> catalog = {
      {"milk", {240, 240, 228}, "white", "carton", 0.030, "a dairy drink for my cereal"},
      {"coke", {205, 30, 30}, "red", "can", 0.028, "a refreshing fizzy beverage"},
      {"gluestick", {235, 210, 50}, "yellow", "stick", 0.022, "something to fasten paper together"},
      {"sponge", {60, 185, 80}, "green", "block", 0.032, "something to wipe up a spill"},
      {"bottle", {50, 90, 215}, "blue", "bottle", 0.026, "a container of drinking water"},
      {"plum", {150, 60, 190}, "purple", "fruit", 0.024, "a small fruit to snack on"},
      {"cup", {70, 200, 210}, "cyan", "cup", 0.027, "something to drink tea from"},
      {"banana", {240, 150, 40}, "orange", "fruit", 0.025, "a fruit you have to peel"},
  };
  return catalog;
}

const CatalogEntry* catalog_find(const std::string& label) {
  for (const auto& e : object_catalog()) {
    if (label == e.label) return &e;
  }
  return nullptr;
}

// ------------------------------------------------------------------ tasks

TaskSpec make_task(Skill skill, int level, int distractors, std::uint64_t seed) {
  Rng rng(hash_combine(seed, 0x7A5C));
  const auto& catalog = object_catalog();
  TaskSpec task;
  task.skill = skill;
  task.level = level;
  task.distractors = level >= 2 ? distractors : 0;
  const std::size_t ti = rng.next_below(catalog.size());
  task.target = catalog[ti].label;
  if (skill == Skill::MoveANearB) {
    std::size_t bi = rng.next_below(catalog.size() - 1);
    if (bi >= ti) ++bi;
    task.secondary = catalog[bi].label;
  }
  if (skill == Skill::PushTargetAside) {
    task.aside_direction = rng.next_below(2) == 0 ? "left" : "right";
  }
  if (skill == Skill::OpenDoor || skill == Skill::CloseDoor) {
    task.target = "door";
  }
  return task;
}

// ------------------------------------------------------------------ reset

namespace {

bool door_task(Skill s) { return s == Skill::OpenDoor || s == Skill::CloseDoor; }

ObjectState spawn(const CatalogEntry& entry, const Vec3& pos) {
  ObjectState o;
  o.label = entry.label;
  o.color = entry.color;
  o.shape = entry.shape;
  o.radius = entry.radius;
  o.position = {pos.x, pos.y, entry.radius};
  o.initial_position = o.position;
  return o;
}

}  // namespace

WorldState reset(const TaskSpec& task, std::uint64_t seed, const SimParams& params) {
  Rng rng(hash_combine(seed, 0x5EED));
  WorldState world;
  world.gripper = {rng.uniform(-0.05, 0.05), -0.28 + rng.uniform(-0.03, 0.03),
                   0.12 + rng.uniform(-0.02, 0.02)};
  world.gripper_pose = Pose6{world.gripper.x, world.gripper.y, world.gripper.z, 0.0, 0.0, 0.0};

  std::vector<std::string> labels;
  if (!door_task(task.skill)) labels.push_back(task.target);
  if (!task.secondary.empty()) labels.push_back(task.secondary);
  {
    // Distractors drawn from the catalog without repeating scene labels.
    std::vector<std::string> pool;
    for (const auto& e : object_catalog()) {
      if (std::find(labels.begin(), labels.end(), e.label) == labels.end()) {
        pool.push_back(e.label);
      }
    }
    for (int i = 0; i < task.distractors && !pool.empty(); ++i) {
      const std::size_t k = rng.next_below(pool.size());
      labels.push_back(pool[k]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    }
  }

  const double spawn_x = 0.26, spawn_y_lo = -0.12, spawn_y_hi = 0.12;
  for (const auto& label : labels) {
    const CatalogEntry* entry = catalog_find(label);
    if (!entry) throw std::invalid_argument("reset: unknown object '" + label + "'");
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const Vec3 pos{rng.uniform(-spawn_x, spawn_x), rng.uniform(spawn_y_lo, spawn_y_hi), 0.0};
      bool ok = true;
      for (const auto& other : world.objects) {
        const Vec3 d = other.position - Vec3{pos.x, pos.y, other.position.z};
        if (d.norm_xy() < params.min_spacing) {
          ok = false;
          break;
        }
      }
      if (ok) {
        world.objects.push_back(spawn(*entry, pos));
        placed = true;
      }
    }
    if (!placed) throw std::runtime_error("reset: could not place '" + label + "' with spacing");
  }

  if (door_task(task.skill)) {
    world.door_angle_deg = task.skill == Skill::OpenDoor ? 0.0 : 90.0 + rng.uniform(0.0, 15.0);
  }
  if (task.skill == Skill::PlaceTarget) {
    auto* obj = world.find(task.target);
    world.held = task.target;
    world.gripper_state.value = 1;
    world.gripper = {obj->position.x, obj->position.y, 0.12 + rng.uniform(0.0, 0.03)};
    obj->position = world.gripper;
    obj->initial_position = obj->position;
  }
  return world;
}

// ------------------------------------------------------------------- step

WorldState step(const WorldState& world, const Action& action, const SimParams& params) {
  WorldState next = world;
  const Vec3 old_pos = world.gripper;

  auto clamp_axis = [&](double v) { return std::clamp(v, -params.max_step, params.max_step); };
  Vec3 delta{clamp_axis(action.delta.x), clamp_axis(action.delta.y), clamp_axis(action.delta.z)};

  next.gripper.x = std::clamp(old_pos.x + delta.x, -params.workspace_half_xy, params.workspace_half_xy);
  next.gripper.y = std::clamp(old_pos.y + delta.y, -params.workspace_half_xy, params.workspace_half_xy);
  next.gripper.z = std::clamp(old_pos.z + delta.z, 0.0, params.workspace_height);
  next.gripper_pose = Pose6{next.gripper.x,
                            next.gripper.y,
                            next.gripper.z,
                            normalize_angle(world.gripper_pose.roll + action.delta.roll),
                            normalize_angle(world.gripper_pose.pitch + action.delta.pitch),
                            normalize_angle(world.gripper_pose.yaw + action.delta.yaw)};

  // Door hinge: the gripper latches onto the handle when it comes within
  // the latch radius and keeps driving the angle until it strays past the
  // release radius. Pulling toward the robot (-y) opens, pushing closes.
  if (next.door_angle_deg) {
    const double dist = (old_pos - world.door_handle).norm();
    if (!next.door_engaged && dist <= params.handle_radius) next.door_engaged = true;
    if (next.door_engaged && dist > params.handle_release_radius) next.door_engaged = false;
    if (next.door_engaged && dist <= params.handle_release_radius) {
      const double dy = next.gripper.y - old_pos.y;
      *next.door_angle_deg = std::clamp(*next.door_angle_deg + params.door_gain_deg_per_m * (-dy),
                                        0.0, 110.0);
    }
  }

  // Gripper command edges: closing may attach, opening releases.
  const int cmd = action.gripper.value;
  if (cmd == 1 && world.gripper_state.value == 0) {
    const ObjectState* nearest = nullptr;
    double best = params.grasp_radius;
    for (const auto& o : next.objects) {
      const double d = (o.position - next.gripper).norm();
      if (d <= best) {
        best = d;
        nearest = &o;
      }
    }
    if (nearest) next.held = nearest->label;
  } else if (cmd == 0 && world.gripper_state.value == 1) {
    if (next.held) {
      auto* obj = next.find(*next.held);
      if (obj) obj->position.z = obj->radius;  // settles straight down
      next.held.reset();
    }
  }
  next.gripper_state.value = cmd;

  // Held object rides the gripper.
  if (next.held) {
    if (auto* obj = next.find(*next.held)) obj->position = next.gripper;
  }

  // Open-gripper contact. The push radius sits inside the grasp radius so a
  // grasp approach can reach attachment distance without bulldozing the
  // target; contact above the knock height tips the object in place.
  if (next.gripper_state.value == 0) {
    for (auto& o : next.objects) {
      if (next.held && o.label == *next.held) continue;
      const Vec3 diff = o.position - next.gripper;
      const double dist = diff.norm();
      if (dist < o.radius + 0.01 &&
          next.gripper.z >= o.position.z + params.knock_contact_height * o.radius) {
        o.upright = false;
      }
      const double push_radius = 0.6 * o.radius;
      if (dist >= push_radius) continue;
      Vec3 dir{diff.x, diff.y, 0.0};
      const double n = dir.norm_xy();
      if (n < 1e-9) {
        dir = {0.0, 1.0, 0.0};
      } else {
        dir = dir * (1.0 / n);
      }
      const double dz = o.position.z - next.gripper.z;
      const double want = std::sqrt(std::max(push_radius * push_radius - dz * dz, 1e-8));
      o.position.x = std::clamp(next.gripper.x + dir.x * want, -params.workspace_half_xy,
                                params.workspace_half_xy);
      o.position.y = std::clamp(next.gripper.y + dir.y * want, -params.workspace_half_xy,
                                params.workspace_half_xy);
    }
  }

  next.step_count = world.step_count + 1;
  return next;
}

// ---------------------------------------------------------------- success

bool success_check(const TaskSpec& task, const WorldState& world, const SimParams& params) {
  switch (task.skill) {
    case Skill::PickTarget: {
      const auto* t = world.find(task.target);
      return t && t->position.z - t->radius >= params.lift_height;
    }
    case Skill::PlaceTarget: {
      const auto* t = world.find(task.target);
      return t && world.held != task.target && t->upright &&
             t->position.z - t->radius <= 0.005;
    }
    case Skill::MoveANearB: {
      const auto* a = world.find(task.target);
      const auto* b = world.find(task.secondary);
      if (!a || !b) return false;
      const bool moved = (a->position - a->initial_position).norm() > 0.01;
      return moved && world.held != task.target &&
             (a->position - b->position).norm() < params.near_distance;
    }
    case Skill::OpenDoor:
      return world.door_angle_deg && *world.door_angle_deg > params.open_angle_deg;
    case Skill::CloseDoor:
      return world.door_angle_deg && *world.door_angle_deg < params.close_angle_deg;
    case Skill::PushTargetFront: {
      const auto* t = world.find(task.target);
      return t && (t->position - t->initial_position).y >= params.push_distance;
    }
    case Skill::PushTargetAside: {
      const auto* t = world.find(task.target);
      return t && std::abs((t->position - t->initial_position).x) >= params.push_distance;
    }
    case Skill::KnockTargetOver: {
      const auto* t = world.find(task.target);
      return t && !t->upright;
    }
  }
  return false;
}

// ----------------------------------------------------------------- render

namespace {

struct Palette {
  std::array<std::uint8_t, 3> table;
  std::array<std::uint8_t, 3> trim;
};

Palette palette_for(int background) {
  switch (background % 3) {
    case 1: return {{122, 122, 130}, {90, 90, 100}};
    case 2: return {{72, 104, 78}, {52, 76, 56}};
    default: return {{96, 76, 56}, {70, 54, 38}};
  }
}

void put(Observation& obs, int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= obs.width || y >= obs.height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * obs.width + x) * 3;
  obs.rgb[i] = r;
  obs.rgb[i + 1] = g;
  obs.rgb[i + 2] = b;
}

}  // namespace

Observation render(const WorldState& world, const SimParams& params, const RenderVariant& variant) {
  const int S = params.image_size;
  Observation obs;
  obs.width = S;
  obs.height = S;
  obs.timestamp = world.step_count;
  obs.rgb.assign(static_cast<std::size_t>(S) * S * 3, 0);

  const Palette pal = palette_for(variant.background);
  for (int y = 0; y < S; ++y) {
    for (int x = 0; x < S; ++x) {
      const bool trim = x == 0 || y == 0 || x == S - 1 || y == S - 1;
      const auto& c = trim ? pal.trim : pal.table;
      put(obs, x, y, c[0], c[1], c[2]);
    }
  }

  const double half = params.workspace_half_xy;
  auto to_px = [&](double wx) { return static_cast<int>(std::lround((wx + half) / (2 * half) * (S - 1))); };
  auto to_py = [&](double wy) {
    return static_cast<int>(std::lround((1.0 - (wy + half) / (2 * half)) * (S - 1)));
  };
  const double px_per_m = (S - 1) / (2 * half);

  // Door: bar along the top edge; the lit span tracks the hinge angle.
  if (world.door_angle_deg) {
    const int span = static_cast<int>(std::lround(*world.door_angle_deg / 110.0 * (S - 10)));
    for (int x = 4; x < S - 4; ++x) {
      for (int y = 2; y < 6; ++y) {
        if (x - 4 < span) {
          put(obs, x, y, 230, 225, 200);  // open gap
        } else {
          put(obs, x, y, 120, 40, 30);  // door slab
        }
      }
    }
    // Handle marker.
    const int hx = to_px(world.door_handle.x), hy = to_py(world.door_handle.y);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) put(obs, hx + dx, hy + dy, 200, 180, 60);
    }
  }

  for (const auto& o : world.objects) {
    const int cx = to_px(o.position.x), cy = to_py(o.position.y);
    const double scale = 1.0 + 0.8 * o.position.z;  // higher reads larger
    const double rx = o.upright ? o.radius * scale : o.radius * scale * 1.5;
    const double ry = o.upright ? o.radius * scale : o.radius * scale * 0.6;
    const int rxp = std::max(1, static_cast<int>(std::lround(rx * px_per_m)));
    const int ryp = std::max(1, static_cast<int>(std::lround(ry * px_per_m)));
    for (int dy = -ryp; dy <= ryp; ++dy) {
      for (int dx = -rxp; dx <= rxp; ++dx) {
        const double u = static_cast<double>(dx) / rxp;
        const double v = static_cast<double>(dy) / ryp;
        if (u * u + v * v <= 1.0) put(obs, cx + dx, cy + dy, o.color[0], o.color[1], o.color[2]);
      }
    }
  }

  // Gripper: dark cross, center pixel bright when open.
  {
    const int gx = to_px(world.gripper.x), gy = to_py(world.gripper.y);
    const int arm = 2 + static_cast<int>(std::lround(world.gripper.z * 6.0));
    for (int d = -arm; d <= arm; ++d) {
      put(obs, gx + d, gy, 25, 25, 25);
      put(obs, gx, gy + d, 25, 25, 25);
    }
    if (world.gripper_state.value == 0) {
      put(obs, gx, gy, 250, 250, 250);
    } else {
      put(obs, gx, gy, 250, 60, 60);
    }
  }

  if (variant.brightness != 1.0) {
    for (auto& v : obs.rgb) {
      const long scaled = std::lround(static_cast<double>(v) * variant.brightness);
      v = static_cast<std::uint8_t>(std::clamp(scaled, 0L, 255L));
    }
  }
  return obs;
}

// ----------------------------------------------------------------- expert

namespace {

Vec3 close_to_goal(const TaskSpec& task, const WorldState& world, const SimParams& params) {
  switch (task.skill) {
    case Skill::PickTarget:
    case Skill::PlaceTarget:
      return world.find(task.target)->position;
    case Skill::MoveANearB: {
      const auto* a = world.find(task.target);
      const auto* b = world.find(task.secondary);
      if (world.held == task.target) {
        // Carry toward a drop point offset from B, at travel height.
        Vec3 offset = a->initial_position - b->position;
        offset.z = 0.0;
        const double n = offset.norm_xy();
        offset = n < 1e-9 ? Vec3{1.0, 0.0, 0.0} : offset * (1.0 / n);
        Vec3 goal = b->position + offset * 0.05;
        goal.z = world.gripper.z;
        return goal;
      }
      return a->position;
    }
    case Skill::OpenDoor:
    case Skill::CloseDoor:
      return world.door_handle;
    case Skill::PushTargetFront:
    case Skill::PushTargetAside:
      return push_approach_point(task.skill, task.aside_direction, *world.find(task.target),
                                 params);
    case Skill::KnockTargetOver:
      return knock_approach_point(*world.find(task.target), params);
  }
  return world.gripper;
}

Action toward(const Vec3& goal, const Vec3& pos, const SimParams& params, int grip) {
  Action a;
  a.delta.x = std::clamp(goal.x - pos.x, -params.max_step, params.max_step);
  a.delta.y = std::clamp(goal.y - pos.y, -params.max_step, params.max_step);
  a.delta.z = std::clamp(goal.z - pos.z, -params.max_step, params.max_step);
  a.gripper.value = grip;
  return a;
}

// Sub-millimeter per-step dither keeps every action dimension spanning a
// few distinct values, which the quantile fit needs; mechanically it is
// far below the grasp radius and success thresholds.
Action dithered(Action a, std::int64_t step_count, const SimParams& params) {
  auto level = [&](int dim) {
    return static_cast<double>((step_count + dim) % 5 - 2);
  };
  a.delta.x = std::clamp(a.delta.x + 2e-4 * level(0), -params.max_step, params.max_step);
  a.delta.y = std::clamp(a.delta.y + 2e-4 * level(1), -params.max_step, params.max_step);
  a.delta.z = std::clamp(a.delta.z + 2e-4 * level(2), -params.max_step, params.max_step);
  a.delta.roll = 1e-3 * level(3);
  a.delta.pitch = 1e-3 * level(4);
  a.delta.yaw = 1e-3 * level(5);
  return a;
}

}  // namespace

Action expert_policy(const TaskSpec& task, const WorldState& world, const SimParams& params) {
  const prim::PrimitiveAction p = prim::parse_primitive_rule(task, world);
  const int keep = world.gripper_state.value;
  const Vec3 g = world.gripper;

  Action a;
  switch (p.kind) {
    case prim::Kind::CloseTo:
      a = toward(close_to_goal(task, world, params), g, params, keep);
      break;
    case prim::Kind::Grasp:
      a.gripper.value = 1;
      break;
    case prim::Kind::MoveUp: {
      double target_z = params.lift_height + 0.03;
      if (world.held) {
        if (const auto* o = world.find(*world.held)) target_z = params.lift_height + o->radius + 0.02;
      }
      a = toward({g.x, g.y, target_z}, g, params, keep);
      break;
    }
    case prim::Kind::MoveDown: {
      double rest = 0.03;
      if (world.held) {
        if (const auto* o = world.find(*world.held)) rest = o->radius;
      }
      a = toward({g.x, g.y, rest}, g, params, keep);
      break;
    }
    case prim::Kind::Release:
      a.gripper.value = 0;
      break;
    case prim::Kind::Push: {
      // Drive at the object's center so lateral drift self-corrects; the
      // contact resolution carries the object ahead of the gripper.
      const auto* t = world.find(task.target);
      double target_z = t->position.z;
      if (task.skill == Skill::KnockTargetOver) {
        target_z = t->position.z + params.knock_contact_height * t->radius + 0.005;
      }
      a = toward({t->position.x, t->position.y, target_z}, g, params, 0);
      a.gripper.value = 0;
      break;
    }
    case prim::Kind::Open:
      a = toward({g.x, g.y - params.max_step, g.z}, g, params, keep);
      break;
    case prim::Kind::Close:
      a = toward({g.x, g.y + params.max_step, g.z}, g, params, keep);
      break;
    default:
      break;
  }
  return dithered(a, world.step_count, params);
}

// ----------------------------------------------------------- instructions

namespace {

std::string level1_instruction(const TaskSpec& task) {
  switch (task.skill) {
    case Skill::PickTarget: return "pick the " + task.target;
    case Skill::PlaceTarget: return "place the " + task.target;
    case Skill::MoveANearB: return "move the " + task.target + " near the " + task.secondary;
    case Skill::OpenDoor: return "open the door";
    case Skill::CloseDoor: return "close the door";
    case Skill::PushTargetFront: return "push the " + task.target + " front";
    case Skill::PushTargetAside: return "push the " + task.target + " " + task.aside_direction;
    case Skill::KnockTargetOver: return "knock the " + task.target + " over";
  }
  return {};
}

std::string verb_phrase(const TaskSpec& task, const std::string& ref) {
  switch (task.skill) {
    case Skill::PickTarget: return "pick up " + ref;
    case Skill::PlaceTarget: return "put " + ref + " down on the table";
    case Skill::MoveANearB: return "bring " + ref + " over to the " + task.secondary;
    case Skill::OpenDoor: return "open the door";
    case Skill::CloseDoor: return "shut the door";
    case Skill::PushTargetFront: return "push " + ref + " forward";
    case Skill::PushTargetAside: return "push " + ref + " to the " + task.aside_direction;
    case Skill::KnockTargetOver: return "tip " + ref + " over";
  }
  return {};
}

const char* kPolitePrefixes[] = {"can you please", "could you please", "would you mind",
                                 "please"};

std::string spatial_reference(const TaskSpec& task, const WorldState& world, Rng& rng) {
  const auto* t = world.find(task.target);
  if (!t) throw std::invalid_argument("gen_instruction: target not in world");
  const CatalogEntry* entry = catalog_find(task.target);

  // Gather relations that actually hold; pick one by seed.
  std::vector<std::string> holds;
  bool leftmost = true, rightmost = true, frontmost = true, nearest = true;
  for (const auto& o : world.objects) {
    if (o.label == t->label) continue;
    if (o.position.x <= t->position.x) leftmost = false;
    if (o.position.x >= t->position.x) rightmost = false;
    if (o.position.y >= t->position.y) frontmost = false;
    if ((o.position - world.gripper).norm() <= (t->position - world.gripper).norm()) {
      nearest = false;
    }
  }
  if (world.objects.size() >= 2) {
    if (leftmost) holds.push_back("the object on the far left");
    if (rightmost) holds.push_back("the object on the far right");
    if (frontmost) holds.push_back("the object furthest from you");
    if (nearest) holds.push_back("the object closest to you");
    for (const auto& o : world.objects) {
      if (o.label == t->label) continue;
      const CatalogEntry* oe = catalog_find(o.label);
      if (!oe) continue;
      if (t->position.y > o.position.y + 0.03) {
        holds.push_back(std::string("the object behind the ") + oe->color_name + " one");
      }
      if (t->position.x < o.position.x - 0.03) {
        holds.push_back(std::string("the object to the left of the ") + oe->color_name + " one");
      }
      if (t->position.x > o.position.x + 0.03) {
        holds.push_back(std::string("the object to the right of the ") + oe->color_name + " one");
      }
    }
  }
  // Appearance reference always holds; scene labels are unique per reset.
  if (entry) holds.push_back(std::string("the ") + entry->color_name + " object");
  if (holds.empty()) throw std::invalid_argument("gen_instruction: no level-4 reference available");
  return holds[rng.next_below(holds.size())];
}

}  // namespace

std::string gen_instruction(const TaskSpec& task, const WorldState& world, int level,
                            std::uint64_t seed) {
  if (level < 1 || level > 4) throw std::invalid_argument("gen_instruction: level must be 1..4");
  Rng rng(hash_combine(seed, 0x1457 + static_cast<std::uint64_t>(level)));

  if (level == 1) return level1_instruction(task);

  if (level == 2) {
    const std::string prefix = kPolitePrefixes[rng.next_below(std::size(kPolitePrefixes))];
    return std::string(prefix) + " " + verb_phrase(task, "the " + task.target);
  }

  const bool object_task = !door_task(task.skill);
  const CatalogEntry* entry = object_task ? catalog_find(task.target) : nullptr;
  if (object_task && !entry) {
    throw std::invalid_argument("gen_instruction: no attributes for '" + task.target + "'");
  }
  if (!object_task) {
    if (level == 3) {
      return task.skill == Skill::OpenDoor ? "let some air in through the door"
                                           : "make sure the room is shut";
    }
    // Level 4: appearance reference via the handle marker.
    return task.skill == Skill::OpenDoor ? "pull open the panel with the yellow handle"
                                         : "push shut the panel with the yellow handle";
  }

  if (level == 3) {
    const std::string prefix = kPolitePrefixes[rng.next_below(std::size(kPolitePrefixes))];
    return std::string(prefix) + " " + verb_phrase(task, entry->function_phrase);
  }
  return "please " + verb_phrase(task, spatial_reference(task, world, rng));
}

// ------------------------------------------------------------ generation

EpisodeResult run_expert_episode(const TaskSpec& task, std::uint64_t seed, int level,
                                 const GenConfig& cfg) {
  WorldState world = reset(task, seed, cfg.params);
  EpisodeResult result;
  result.trajectory.task = skill_key(task.skill);
  result.trajectory.level = level;
  result.trajectory.instruction = gen_instruction(task, world, level, seed);

  for (std::int64_t t = 0; t < cfg.step_cap; ++t) {
    TrajectoryStep ts;
    ts.observation = render(world, cfg.params, cfg.variant);
    ts.state = world.gripper_pose;
    ts.gripper = world.gripper_state;
    ts.primitive_label = prim::to_ref(prim::parse_primitive_rule(task, world));
    if (success_check(task, world, cfg.params)) {
      ts.action.reset();
      result.trajectory.steps.push_back(std::move(ts));
      result.success = true;
      break;
    }
    const Action a = expert_policy(task, world, cfg.params);
    ts.action = a;
    result.trajectory.steps.push_back(std::move(ts));
    world = step(world, a, cfg.params);
  }
  result.steps_used = result.trajectory.length();
  result.final_world = world;
  if (!result.success) {
    throw std::runtime_error("expert failed on task '" + skill_key(task.skill) + "' seed " +
                             std::to_string(seed));
  }
  return result;
}

std::vector<Trajectory> generate_dataset(const GenConfig& cfg) {
  std::vector<Trajectory> out;
  const wp::WaypointRuleConfig rules;
  for (std::size_t ti = 0; ti < cfg.tasks.size(); ++ti) {
    for (int e = 0; e < cfg.episodes_per_task; ++e) {
      const std::uint64_t episode_seed =
          hash_combine(cfg.seed, (static_cast<std::uint64_t>(ti) << 32) | static_cast<std::uint64_t>(e));
      const int level = cfg.levels[e % cfg.levels.size()];
      const TaskSpec task = make_task(cfg.tasks[ti], level, cfg.distractors, episode_seed);
      EpisodeResult ep = run_expert_episode(task, episode_seed, level, cfg);
      auto marks = wp::extract_waypoints(ep.trajectory, rules);
      out.push_back(wp::assign_waypoint_targets(std::move(ep.trajectory), marks));
    }
  }
  return out;
}

}  // namespace pivot::sim
