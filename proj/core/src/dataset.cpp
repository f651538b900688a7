#include "pivot/dataset.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "pivot/base64.hpp"

namespace pivot {

using nlohmann::json;

namespace {

json pose_to_json(const Pose6& p) {
  return json{{"x", p.x},       {"y", p.y},         {"z", p.z},
              {"roll", p.roll}, {"pitch", p.pitch}, {"yaw", p.yaw}};
}

Pose6 pose_from_json(const json& j) {
  return Pose6{j.at("x").get<double>(),    j.at("y").get<double>(),
               j.at("z").get<double>(),    j.at("roll").get<double>(),
               j.at("pitch").get<double>(), j.at("yaw").get<double>()};
}

json primitive_to_json(const PrimitiveRef& p) {
  json j{{"kind", p.kind}, {"target", p.target}};
  if (p.direction) j["direction"] = *p.direction;
  return j;
}

PrimitiveRef primitive_from_json(const json& j) {
  PrimitiveRef p;
  p.kind = j.at("kind").get<std::string>();
  p.target = j.value("target", std::string{});
  if (j.contains("direction")) p.direction = j.at("direction").get<std::string>();
  return p;
}

const char* cause_name(WaypointCause c) {
  return c == WaypointCause::PrimitiveCompletion ? "primitive_completion" : "robot_state_change";
}

WaypointCause cause_from_name(const std::string& s) {
  if (s == "primitive_completion") return WaypointCause::PrimitiveCompletion;
  if (s == "robot_state_change") return WaypointCause::RobotStateChange;
  throw std::invalid_argument("unknown waypoint cause '" + s + "'");
}

}  // namespace

std::string trajectory_to_line(const Trajectory& traj) {
  json steps = json::array();
  for (const auto& s : traj.steps) {
    json js;
    js["obs"] = json{{"h", s.observation.height},
                     {"w", s.observation.width},
                     {"rgb", base64_encode(s.observation.rgb)},
                     {"t", s.observation.timestamp}};
    js["state"] = pose_to_json(s.state);
    js["gripper"] = s.gripper.value;
    if (s.action) {
      js["action"] = json{{"dx", s.action->delta.x},        {"dy", s.action->delta.y},
                          {"dz", s.action->delta.z},        {"droll", s.action->delta.roll},
                          {"dpitch", s.action->delta.pitch}, {"dyaw", s.action->delta.yaw},
                          {"gripper", s.action->gripper.value}};
    }
    if (s.waypoint_target) js["target"] = *s.waypoint_target;
    if (s.primitive_label) js["primitive"] = primitive_to_json(*s.primitive_label);
    steps.push_back(std::move(js));
  }

  json marks = json::array();
  for (const auto& m : traj.marks) {
    marks.push_back(json{{"step", m.step},
                         {"primitive", primitive_to_json(m.primitive)},
                         {"cause", cause_name(m.cause)}});
  }

  json rec{{"instruction", traj.instruction},
           {"level", traj.level},
           {"task", traj.task},
           {"marks", std::move(marks)},
           {"steps", std::move(steps)}};
  return rec.dump();
}

Trajectory trajectory_from_line(const std::string& line, std::size_t line_no) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::exception& e) {
    throw SchemaError(line_no, "<record>", std::string("not valid JSON: ") + e.what());
  }

  std::string field = "<record>";
  try {
    Trajectory traj;
    field = "instruction";
    traj.instruction = rec.at("instruction").get<std::string>();
    field = "level";
    traj.level = rec.at("level").get<int>();
    field = "task";
    traj.task = rec.at("task").get<std::string>();

    field = "steps";
    for (std::size_t i = 0; i < rec.at("steps").size(); ++i) {
      field = "steps[" + std::to_string(i) + "]";
      const json& js = rec.at("steps").at(i);
      TrajectoryStep s;
      const json& jo = js.at("obs");
      s.observation.height = jo.at("h").get<int>();
      s.observation.width = jo.at("w").get<int>();
      s.observation.rgb = base64_decode(jo.at("rgb").get<std::string>());
      s.observation.timestamp = jo.at("t").get<std::int64_t>();
      s.state = pose_from_json(js.at("state")).normalized();
      s.gripper.value = js.at("gripper").get<int>();
      if (js.contains("action")) {
        const json& ja = js.at("action");
        Action a;
        a.delta = Pose6{ja.at("dx").get<double>(),    ja.at("dy").get<double>(),
                        ja.at("dz").get<double>(),    ja.at("droll").get<double>(),
                        ja.at("dpitch").get<double>(), ja.at("dyaw").get<double>()};
        a.gripper.value = ja.at("gripper").get<int>();
        s.action = a;
      }
      if (js.contains("target")) s.waypoint_target = js.at("target").get<std::int64_t>();
      if (js.contains("primitive")) s.primitive_label = primitive_from_json(js.at("primitive"));
      traj.steps.push_back(std::move(s));
    }

    field = "marks";
    for (std::size_t i = 0; i < rec.at("marks").size(); ++i) {
      field = "marks[" + std::to_string(i) + "]";
      const json& jm = rec.at("marks").at(i);
      WaypointMark m;
      m.step = jm.at("step").get<std::int64_t>();
      m.primitive = primitive_from_json(jm.at("primitive"));
      m.cause = cause_from_name(jm.at("cause").get<std::string>());
      traj.marks.push_back(std::move(m));
    }

    field = "<record>";
    validate_trajectory(traj);
    return traj;
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(line_no, field, e.what());
  }
}

std::vector<Trajectory> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open '" + path + "'");

  std::string line;
  std::size_t line_no = 0;
  std::vector<Trajectory> out;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != kDatasetHeader) {
        throw SchemaError(1, "<header>", "expected '" + std::string(kDatasetHeader) + "'");
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    out.push_back(trajectory_from_line(line, line_no));
  }
  if (!saw_header && line_no == 0) {
    // An entirely empty file is an empty dataset.
    return out;
  }
  if (in.bad()) throw std::runtime_error("load_dataset: I/O error reading '" + path + "'");
  return out;
}

void save_dataset(const std::vector<Trajectory>& trajectories, const std::string& path) {
  for (const auto& t : trajectories) validate_trajectory(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_dataset: cannot open '" + path + "' for writing");
  if (trajectories.empty()) return;  // empty dataset -> empty file
  out << kDatasetHeader << '\n';
  for (const auto& t : trajectories) out << trajectory_to_line(t) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("save_dataset: I/O error writing '" + path + "'");
}

}  // namespace pivot
