#include <cmath>
#include <memory>

#include "pivot/harness.hpp"
#include "pivot/primitives.hpp"

namespace pivot::harness {

namespace {

// Latest view of the environment shared down the pipeline: a rolling
// history window (already encoded) plus the raw world for the rule parser.
struct CameraFrame {
  std::vector<enc::FeatureMap> window;           // h+1 feature maps
  std::vector<std::array<double, 7>> states;     // h+1 robot states
  sim::WorldState world;
  Observation latest;                            // for wire-mode prompts
};

std::array<double, 7> state_vec(const sim::WorldState& w) {
  return {w.gripper_pose.x,    w.gripper_pose.y,     w.gripper_pose.z,
          w.gripper_pose.roll, w.gripper_pose.pitch, w.gripper_pose.yaw,
          double(w.gripper_state.value)};
}

struct EpisodeRun {
  bool success = false;
  std::int64_t env_steps = 0;
  exec::ExecutionTrace trace;
};

// One closed-loop episode: parser -> scene -> action over mailboxes, the
// action stage driving the simulator.
EpisodeRun run_episode(PolicyModel& model, const act::Discretizer& disc, const sim::TaskSpec& task,
                       const std::string& instruction, sim::WorldState start,
                       const ExperimentConfig& cfg, const sim::RenderVariant& variant,
                       bool synchronous) {
  const sim::SimParams params;
  const int h = cfg.history;

  auto world = std::make_shared<sim::WorldState>(std::move(start));
  auto done = std::make_shared<bool>(false);
  auto steps = std::make_shared<std::int64_t>(0);

  auto make_frame = [&, world]() {
    auto frame = std::make_shared<CameraFrame>();
    frame->world = *world;
    frame->latest = sim::render(*world, params, variant);
    enc::FeatureMap fm = model.image_encoder.encode(frame->latest);
    const auto sv = state_vec(*world);
    for (int i = 0; i <= h; ++i) {
      frame->window.push_back(fm);
      frame->states.push_back(sv);
    }
    return frame;
  };
  auto frame_state = std::make_shared<std::shared_ptr<CameraFrame>>();

  exec::EnvHook env;
  env.initial = [&, frame_state, make_frame]() -> exec::Value {
    *frame_state = make_frame();
    return std::static_pointer_cast<const void>(*frame_state);
  };
  env.step = [&, world, done, steps, frame_state](const exec::Value& action_out,
                                                  exec::VTime) -> exec::Value {
    if (*done) return nullptr;
    const auto* act_ptr = static_cast<const Action*>(action_out.get());
    *world = sim::step(*world, *act_ptr, params);
    ++*steps;
    if (sim::success_check(task, *world, params)) {
      *done = true;
      return nullptr;
    }
    if (*steps >= cfg.eval_step_cap) return nullptr;

    // Roll the window forward one frame.
    auto next = std::make_shared<CameraFrame>(**frame_state);
    next->world = *world;
    next->latest = sim::render(*world, params, variant);
    next->window.erase(next->window.begin());
    next->window.push_back(model.image_encoder.encode(next->latest));
    next->states.erase(next->states.begin());
    next->states.push_back(state_vec(*world));
    *frame_state = next;
    return std::static_pointer_cast<const void>(next);
  };

  exec::StageSpec parser_stage;
  parser_stage.name = "parser";
  parser_stage.rate_hz = cfg.v1;
  parser_stage.inputs = {"camera"};
  parser_stage.compute = [&task](const exec::Inputs& in) -> exec::Value {
    const auto& cam = in.at("camera");
    if (!cam.value) return nullptr;
    const auto* frame = static_cast<const CameraFrame*>(cam.value.get());
    auto p = std::make_shared<prim::PrimitiveAction>(prim::parse_primitive_rule(task, frame->world));
    return std::static_pointer_cast<const void>(p);
  };

  exec::StageSpec scene_stage;
  scene_stage.name = "scene";
  scene_stage.rate_hz = cfg.v2;
  scene_stage.inputs = {"camera", "parser"};
  scene_stage.compute = [&model, &instruction](const exec::Inputs& in) -> exec::Value {
    const auto& cam = in.at("camera");
    const auto& par = in.at("parser");
    if (!cam.value || !par.value) return nullptr;
    const auto* frame = static_cast<const CameraFrame*>(cam.value.get());
    const auto* primitive = static_cast<const prim::PrimitiveAction*>(par.value.get());
    const auto indicator = wm::compose_indicator(instruction, *primitive, model.text_encoder);
    nn::RunState rs;  // eval mode
    auto pred = std::make_shared<enc::FeatureMap>(model.scene.forward(indicator, frame->window, rs));
    return std::static_pointer_cast<const void>(pred);
  };

  exec::StageSpec action_stage;
  action_stage.name = "action";
  action_stage.rate_hz = cfg.v3;
  action_stage.inputs = {"camera", "scene"};
  action_stage.compute = [&model, &disc](const exec::Inputs& in) -> exec::Value {
    const auto& cam = in.at("camera");
    const auto& sc = in.at("scene");
    if (!cam.value || !sc.value) return nullptr;
    const auto* frame = static_cast<const CameraFrame*>(cam.value.get());
    const auto* pred = static_cast<const enc::FeatureMap*>(sc.value.get());
    nn::RunState rs;
    act::ActionLogits logits = model.action.forward(*pred, frame->window, frame->states, rs);
    auto a = std::make_shared<Action>(disc.decode(logits.argmax()));
    return std::static_pointer_cast<const void>(a);
  };

  std::vector<exec::StageSpec> stages{parser_stage, scene_stage, action_stage};
  EpisodeRun run;
  if (synchronous) {
    run.trace = exec::run_synchronous(stages, cfg.eval_step_cap, env);
  } else {
    exec::ExecutorConfig xc;
    xc.mode = exec::ExecMode::VirtualClock;
    // Just enough virtual time for the step cap at the action rate.
    xc.duration = exec::VTime::of(cfg.eval_step_cap + 4, cfg.v3);
    run.trace = exec::run_pipeline(xc, stages, env);
  }
  run.success = *done;
  run.env_steps = *steps;
  return run;
}

}  // namespace

EvalResult evaluate(PolicyModel& model, const act::Discretizer& disc, const EvalSpec& spec,
                    const ExperimentConfig& cfg) {
  EvalResult result;
  result.episodes = spec.episodes;
  double wall_acc = 0.0, stale_acc = 0.0, rate_acc = 0.0;
  int metric_count = 0;

  for (int ep = 0; ep < spec.episodes; ++ep) {
    const std::uint64_t seed = hash_combine(cfg.eval_seed, (std::uint64_t(spec.level) << 32) |
                                                                   std::uint64_t(ep));
    const sim::TaskSpec task = sim::make_task(spec.skill, spec.level, spec.distractors, seed);
    sim::WorldState world = sim::reset(task, seed, sim::SimParams{});
    const std::string instruction = sim::gen_instruction(task, world, spec.level, seed);

    EpisodeRun run = run_episode(model, disc, task, instruction, std::move(world), cfg,
                                 spec.variant, cfg.eval_mode == "sync");
    if (run.success) ++result.successes;

    if (!run.trace.records.empty()) {
      std::vector<exec::StageSpec> shape(3);
      shape[0].name = "parser";
      shape[0].rate_hz = cfg.v1;
      shape[1].name = "scene";
      shape[1].rate_hz = cfg.v2;
      shape[2].name = "action";
      shape[2].rate_hz = cfg.v3;
      const auto metrics = exec::trace_metrics(run.trace, shape);
      double step_ms = 0.0;
      if (cfg.eval_mode == "sync") {
        for (const auto& [name, sm] : metrics.stages) step_ms += sm.mean_latency_ms;
      } else if (metrics.stages.count("action")) {
        step_ms = metrics.stages.at("action").mean_latency_ms;
      }
      wall_acc += step_ms;
      const auto it = metrics.stages.find("action");
      if (it != metrics.stages.end()) {
        const auto st = it->second.mean_staleness.find("scene");
        if (st != it->second.mean_staleness.end()) stale_acc += st->second;
      }
      rate_acc += metrics.steps_per_second;
      ++metric_count;
    }
  }
  result.success_rate = double(result.successes) / double(std::max(1, spec.episodes));
  if (metric_count > 0) {
    result.mean_step_wall_ms = wall_acc / metric_count;
    result.mean_parser_staleness = stale_acc / metric_count;
    result.steps_per_second_virtual = rate_acc / metric_count;
  }
  return result;
}

std::vector<FeatureDistanceSeries> diag_feature_distances(PolicyModel& model,
                                                          const std::vector<Trajectory>& trajs) {
  std::vector<FeatureDistanceSeries> out;
  const int h = model.cfg.history;
  for (const auto& traj : trajs) {
    FeatureDistanceSeries series;
    std::vector<enc::FeatureMap> features;
    features.reserve(traj.steps.size());
    for (const auto& s : traj.steps) features.push_back(model.image_encoder.encode(s.observation));

    for (std::int64_t t = 0; t < traj.length(); ++t) {
      const auto& step = traj.steps[t];
      if (!step.waypoint_target || !step.primitive_label) {
        throw std::invalid_argument("diag: trajectory must be annotated");
      }
      const auto& target = features[*step.waypoint_target];
      series.d1.push_back(wm::scene_loss(features[t], target, model.loss_kind));

      std::vector<enc::FeatureMap> window;
      for (std::int64_t k = t - h; k <= t; ++k) window.push_back(features[k < 0 ? 0 : k]);
      const auto indicator = wm::compose_indicator(
          traj.instruction, prim::from_ref(*step.primitive_label), model.text_encoder);
      nn::RunState rs;
      const enc::FeatureMap pred = model.scene.forward(indicator, window, rs);
      series.d2.push_back(wm::scene_loss(pred, target, model.loss_kind));
    }
    out.push_back(std::move(series));
  }
  return out;
}

}  // namespace pivot::harness
