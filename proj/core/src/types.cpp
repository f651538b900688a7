#include "pivot/types.hpp"

#include <stdexcept>
#include <string>

namespace pivot {

namespace {

void require(bool cond, const std::string& field, const std::string& what) {
  if (!cond) throw std::invalid_argument("trajectory field '" + field + "': " + what);
}

}  // namespace

void validate_trajectory(const Trajectory& traj) {
  const std::int64_t T = traj.length();
  require(T >= 2, "steps", "need at least 2 steps, got " + std::to_string(T));
  require(traj.level >= 1 && traj.level <= 4, "level",
          "must be in 1..4, got " + std::to_string(traj.level));
  require(!traj.instruction.empty(), "instruction", "must be nonempty");

  for (std::int64_t t = 0; t < T; ++t) {
    const auto& s = traj.steps[t];
    const std::string at = "steps[" + std::to_string(t) + "].";
    require(s.observation.height > 0 && s.observation.width > 0, at + "observation",
            "image dimensions must be positive");
    require(static_cast<std::int64_t>(s.observation.rgb.size()) ==
                std::int64_t{3} * s.observation.height * s.observation.width,
            at + "observation.rgb", "byte count does not match h*w*3");
    require(s.state.finite(), at + "state", "must be finite");
    require(s.gripper.valid(), at + "gripper", "must be 0 or 1");
    if (t + 1 < T) {
      require(s.action.has_value(), at + "action", "only the final step may omit the action");
    }
    if (s.action) {
      require(s.action->delta.finite(), at + "action", "must be finite");
      require(s.action->gripper.valid(), at + "action.gripper", "must be 0 or 1");
    }
    if (s.waypoint_target) {
      require(*s.waypoint_target >= t && *s.waypoint_target < T, at + "waypoint_target",
              "must lie in [own step, T)");
    }
  }

  std::int64_t prev = -1;
  for (std::size_t i = 0; i < traj.marks.size(); ++i) {
    const auto& m = traj.marks[i];
    const std::string at = "marks[" + std::to_string(i) + "]";
    require(m.step >= 0 && m.step < T, at, "step out of trajectory bounds");
    require(m.step > prev, at, "marks must be strictly increasing by step");
    prev = m.step;
  }
}

HistoryWindow history_window(const Trajectory& traj, std::int64_t t, int h) {
  if (t < 0 || t >= traj.length()) {
    throw std::out_of_range("history_window: step " + std::to_string(t) + " outside [0, " +
                            std::to_string(traj.length()) + ")");
  }
  HistoryWindow win;
  win.h = h;
  win.observations.reserve(h + 1);
  win.states.reserve(h + 1);
  win.grippers.reserve(h + 1);
  for (std::int64_t k = t - h; k <= t; ++k) {
    const auto& s = traj.steps[k < 0 ? 0 : k];
    win.observations.push_back(&s.observation);
    win.states.push_back(s.state);
    win.grippers.push_back(s.gripper);
  }
  return win;
}

}  // namespace pivot
