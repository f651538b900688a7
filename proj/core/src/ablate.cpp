#include <stdexcept>

#include "pivot/harness.hpp"

namespace pivot::harness {

namespace {

AblationRow train_and_eval(const ExperimentConfig& base, const std::vector<Trajectory>& dataset,
                           const std::string& name, const ExperimentConfig& variant,
                           const std::string& annotate_mode, const EvalSpec& eval_spec) {
  auto data = reannotate(dataset, annotate_mode);
  PolicyModel model(variant);
  TrainResult tr = train(variant, data, model);
  EvalResult ev = evaluate(model, tr.discretizer, eval_spec, variant);
  AblationRow row;
  row.setting = name;
  row.success_rate = ev.success_rate;
  row.mean_step_wall_ms = ev.mean_step_wall_ms;
  row.final_loss = tr.final_loss;
  (void)base;
  return row;
}

}  // namespace

std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg,
                                      const std::vector<Trajectory>& dataset,
                                      const std::string& axis, const EvalSpec& eval_spec,
                                      const std::vector<std::string>& settings) {
  std::vector<AblationRow> rows;

  if (axis == "waypoint-target") {
    std::vector<std::string> modes =
        settings.empty() ? std::vector<std::string>{"waypoint", "next"} : settings;
    for (const auto& mode : modes) {
      ExperimentConfig v = cfg;
      v.waypoint_target_mode = mode;
      v.checkpoint_dir = cfg.checkpoint_dir;
      rows.push_back(train_and_eval(cfg, dataset, mode, v, mode, eval_spec));
    }
    return rows;
  }

  if (axis == "sync") {
    // One training; the executor mode changes at evaluation time.
    auto data = reannotate(dataset, cfg.waypoint_target_mode);
    PolicyModel model(cfg);
    TrainResult tr = train(cfg, data, model);
    for (const std::string mode : {"async", "sync"}) {
      ExperimentConfig v = cfg;
      v.eval_mode = mode;
      EvalResult ev = evaluate(model, tr.discretizer, eval_spec, v);
      rows.push_back({mode, ev.success_rate, ev.mean_step_wall_ms, tr.final_loss});
    }
    return rows;
  }

  if (axis == "scene-loss") {
    for (const std::string kind : {"distance", "squared"}) {
      ExperimentConfig v = cfg;
      v.scene_loss = kind;
      rows.push_back(train_and_eval(cfg, dataset, kind, v, cfg.waypoint_target_mode, eval_spec));
    }
    return rows;
  }

  if (axis == "action-size") {
    for (const int la : {cfg.action_layers, cfg.action_layers * 2}) {
      ExperimentConfig v = cfg;
      v.action_layers = la;
      rows.push_back(train_and_eval(cfg, dataset, "LA=" + std::to_string(la), v,
                                    cfg.waypoint_target_mode, eval_spec));
    }
    return rows;
  }

  throw std::invalid_argument("run_ablation: unknown axis '" + axis + "'");
}

}  // namespace pivot::harness
