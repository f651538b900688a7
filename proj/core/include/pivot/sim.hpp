#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pivot/types.hpp"
#include "pivot/world.hpp"

namespace pivot::sim {

// Background palette and global brightness used by the robustness suites.
struct RenderVariant {
  int background = 0;       // 0 default, 1/2 unseen tables
  double brightness = 1.0;  // global scale, rounded per pixel
};

struct CatalogEntry {
  const char* label;
  std::array<std::uint8_t, 3> color;
  const char* color_name;
  const char* shape;
  double radius;
  const char* function_phrase;  // level-3 description, never contains label
};

const std::vector<CatalogEntry>& object_catalog();
const CatalogEntry* catalog_find(const std::string& label);

// Deterministic placement from the seed; enforces minimum spacing and
// throws after bounded retries if the layout cannot fit.
WorldState reset(const TaskSpec& task, std::uint64_t seed, const SimParams& params = {});

// Kinematic step: per-axis clamped gripper motion, attach-on-close
// grasping, held objects riding the gripper, horizontal push resolution on
// contact, and the door hinge driven by motion near the handle.
WorldState step(const WorldState& world, const Action& action, const SimParams& params = {});

bool success_check(const TaskSpec& task, const WorldState& world, const SimParams& params = {});

Observation render(const WorldState& world, const SimParams& params = {},
                   const RenderVariant& variant = {});

// Proportional controller toward the active primitive's geometric subgoal.
Action expert_policy(const TaskSpec& task, const WorldState& world, const SimParams& params = {});

// Level 1: verb+noun. Level 2: natural paraphrase naming the target.
// Level 3: functional reference, never naming the target. Level 4: spatial
// or appearance reference consistent with the actual scene geometry.
std::string gen_instruction(const TaskSpec& task, const WorldState& world, int level,
                            std::uint64_t seed);

struct EpisodeResult {
  bool success = false;
  std::int64_t steps_used = 0;
  WorldState final_world;
  Trajectory trajectory;
};

struct GenConfig {
  std::vector<Skill> tasks{Skill::PickTarget};
  int episodes_per_task = 10;
  std::vector<int> levels{1};
  int distractors = 2;       // applied to levels >= 2
  RenderVariant variant;
  std::uint64_t seed = 1;
  std::int64_t step_cap = 250;
  SimParams params;
};

// One expert rollout with primitive labels on every step; throws if the
// expert fails to reach the success condition within the step cap.
EpisodeResult run_expert_episode(const TaskSpec& task, std::uint64_t seed, int level,
                                 const GenConfig& cfg);

// Expert demonstrations with waypoint marks and supervision targets filled.
std::vector<Trajectory> generate_dataset(const GenConfig& cfg);

// Seeded task instantiation shared by generation and evaluation: picks
// target labels (and the B object / push side where relevant).
TaskSpec make_task(Skill skill, int level, int distractors, std::uint64_t seed);

}  // namespace pivot::sim
