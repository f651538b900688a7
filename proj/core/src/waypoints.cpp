#include "pivot/waypoints.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pivot::wp {

namespace {

double step_displacement(const Trajectory& traj, std::int64_t t) {
  const auto& a = traj.steps[t - 1].state;
  const auto& b = traj.steps[t].state;
  const double dx = b.x - a.x, dy = b.y - a.y, dz = b.z - a.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

std::vector<WaypointMark> extract_waypoints(const Trajectory& traj,
                                            const WaypointRuleConfig& config) {
  validate_trajectory(traj);
  if (config.speed_threshold <= 0.0) throw std::invalid_argument("waypoints: threshold must be > 0");
  if (config.speed_window < 1) throw std::invalid_argument("waypoints: window must be >= 1");

  const std::int64_t T = traj.length();
  if (config.use_completion_rule) {
    for (const auto& s : traj.steps) {
      if (!s.primitive_label) {
        throw std::invalid_argument(
            "waypoints: completion rule needs a primitive label on every step");
      }
    }
  }

  struct Raw {
    std::int64_t step;
    WaypointCause cause;
  };
  std::vector<Raw> raw;

  for (std::int64_t t = 0; t < T; ++t) {
    bool completion = false;
    bool state_change = false;
    if (config.use_completion_rule) {
      if (t + 1 < T && !(*traj.steps[t].primitive_label == *traj.steps[t + 1].primitive_label)) {
        completion = true;
      }
      if (t == T - 1) completion = true;  // terminal frame closes the last primitive
    } else if (t == T - 1) {
      state_change = true;  // the terminal step is always a mark
    }
    if (config.use_state_rule) {
      if (t >= config.speed_window) {
        double mean = 0.0;
        for (int k = 0; k < config.speed_window; ++k) mean += step_displacement(traj, t - k);
        mean /= static_cast<double>(config.speed_window);
        if (mean < config.speed_threshold) state_change = true;
      }
      if (t >= 1 && traj.steps[t].gripper.value != traj.steps[t - 1].gripper.value) {
        state_change = true;
      }
    }
    if (completion || state_change) {
      raw.push_back({t, completion ? WaypointCause::PrimitiveCompletion
                                   : WaypointCause::RobotStateChange});
    }
  }

  // Merge marks within one step of the previously kept mark; the earliest
  // step survives and a completion cause dominates.
  std::vector<WaypointMark> out;
  for (const auto& r : raw) {
    if (!out.empty() && r.step <= out.back().step + 1) {
      if (r.cause == WaypointCause::PrimitiveCompletion) {
        out.back().cause = WaypointCause::PrimitiveCompletion;
      }
      continue;
    }
    WaypointMark m;
    m.step = r.step;
    m.cause = r.cause;
    if (traj.steps[r.step].primitive_label) m.primitive = *traj.steps[r.step].primitive_label;
    out.push_back(std::move(m));
  }
  return out;
}

Trajectory assign_waypoint_targets(Trajectory traj, const std::vector<WaypointMark>& marks,
                                   TargetMode mode) {
  const std::int64_t T = traj.length();
  if (T == 0) throw std::invalid_argument("assign_waypoint_targets: empty trajectory");
  for (std::size_t i = 1; i < marks.size(); ++i) {
    if (marks[i].step <= marks[i - 1].step) {
      throw std::invalid_argument("assign_waypoint_targets: marks must be sorted ascending");
    }
  }

  for (std::int64_t t = 0; t < T; ++t) {
    std::int64_t target = T - 1;
    switch (mode) {
      case TargetMode::NextWaypoint: {
        for (const auto& m : marks) {
          if (m.step > t) {
            target = m.step;
            break;
          }
        }
        break;
      }
      case TargetMode::NextFrame:
        target = std::min(t + 1, T - 1);
        break;
      case TargetMode::IntervalFrame:
        target = std::min(t + kIntervalFrames, T - 1);
        break;
      case TargetMode::FinalFrame:
        target = T - 1;
        break;
    }
    traj.steps[t].waypoint_target = target;
  }
  traj.marks = marks;
  return traj;
}

}  // namespace pivot::wp
