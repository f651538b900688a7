#pragma once

#include <vector>

#include "pivot/types.hpp"

namespace pivot::wp {

struct WaypointRuleConfig {
  double speed_threshold = 1e-3;  // mean |dpos| per step, meters
  int speed_window = 3;           // trailing steps in the mean
  bool use_completion_rule = true;    // rule (a): primitive label changes
  bool use_state_rule = true;         // rules (b)+(c): near-zero speed, gripper flip
};

// Marks where (a) the primitive label differs from the next step's label,
// (b) mean trailing speed drops under the threshold, or (c) the gripper
// state flips; the terminal step is always a mark. Marks within one step of
// the previous kept mark merge into it, completion cause dominating.
std::vector<WaypointMark> extract_waypoints(const Trajectory& traj,
                                            const WaypointRuleConfig& config = {});

enum class TargetMode { NextWaypoint, NextFrame, IntervalFrame, FinalFrame };

inline constexpr int kIntervalFrames = 5;

// Fills waypoint_target on every step. NextWaypoint: first mark step
// strictly greater than t, else the final step. The other modes are the
// fixed-offset comparison settings (t+1, t+5 clamped, T-1).
Trajectory assign_waypoint_targets(Trajectory traj, const std::vector<WaypointMark>& marks,
                                   TargetMode mode = TargetMode::NextWaypoint);

}  // namespace pivot::wp
