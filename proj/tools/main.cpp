#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>

#include "pivot/dataset.hpp"
#include "pivot/harness.hpp"

namespace {

using namespace pivot;

int cmd_gen_data(const std::string& tasks_csv, int episodes, const std::string& levels_csv,
                 int distractors, int background, double brightness, std::uint64_t seed,
                 const std::string& out_path) {
  sim::GenConfig cfg;
  cfg.tasks.clear();
  std::stringstream ts(tasks_csv);
  std::string item;
  while (std::getline(ts, item, ',')) cfg.tasks.push_back(sim::skill_from_key(item));
  cfg.levels.clear();
  std::stringstream ls(levels_csv);
  while (std::getline(ls, item, ',')) cfg.levels.push_back(std::stoi(item));
  cfg.episodes_per_task = episodes;
  cfg.distractors = distractors;
  cfg.variant.background = background;
  cfg.variant.brightness = brightness;
  cfg.seed = seed;

  const auto dataset = sim::generate_dataset(cfg);
  save_dataset(dataset, out_path);
  std::cout << "wrote " << dataset.size() << " trajectories to " << out_path << "\n";
  return 0;
}

int cmd_annotate(const std::string& in_path, const std::string& out_path, const std::string& mode) {
  auto dataset = load_dataset(in_path);
  dataset = harness::reannotate(std::move(dataset), mode);
  save_dataset(dataset, out_path);
  std::cout << "annotated " << dataset.size() << " trajectories (" << mode << ") to " << out_path
            << "\n";
  return 0;
}

int cmd_train(const std::string& config_path) {
  auto cfg = harness::load_config(config_path);
  if (cfg.train_dataset.empty()) throw std::runtime_error("train: config lacks train_dataset");
  auto dataset = load_dataset(cfg.train_dataset);
  dataset = harness::reannotate(std::move(dataset), cfg.waypoint_target_mode);
  harness::PolicyModel model(cfg);
  const auto result = harness::train(cfg, dataset, model);
  std::cout << "initial loss " << result.initial_loss << ", final loss " << result.final_loss
            << "\ncheckpoint: " << result.checkpoint_path << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint, const std::string& skill,
             int level, int distractors, int episodes, int background, double brightness) {
  auto cfg = harness::load_config(config_path);
  auto loaded = harness::load_model_checkpoint(checkpoint);
  harness::EvalSpec spec;
  spec.skill = sim::skill_from_key(skill);
  spec.level = level;
  spec.distractors = distractors;
  spec.episodes = episodes;
  spec.variant.background = background;
  spec.variant.brightness = brightness;
  loaded.model->cfg.eval_mode = cfg.eval_mode;
  loaded.model->cfg.eval_seed = cfg.eval_seed;
  loaded.model->cfg.eval_step_cap = cfg.eval_step_cap;
  const auto result = harness::evaluate(*loaded.model, loaded.discretizer, spec, loaded.model->cfg);
  std::cout << nlohmann::json{{"skill", skill},
                              {"level", level},
                              {"episodes", result.episodes},
                              {"successes", result.successes},
                              {"success_rate", result.success_rate},
                              {"mean_step_wall_ms", result.mean_step_wall_ms},
                              {"steps_per_second_virtual", result.steps_per_second_virtual}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_bench_ahe(std::int64_t v1, std::int64_t v2, std::int64_t v3, std::int64_t c1,
                  std::int64_t c2, std::int64_t c3, const std::string& mode, double seconds,
                  const std::string& trace_path) {
  auto counter = std::make_shared<std::int64_t>(0);
  auto mk_payload = [] { return std::make_shared<const int>(0); };

  std::vector<exec::StageSpec> stages(3);
  stages[0] = {"parser", v1, exec::VTime::millis(c1),
               [mk_payload](const exec::Inputs&) -> exec::Value { return mk_payload(); },
               {"camera"}};
  stages[1] = {"scene", v2, exec::VTime::millis(c2),
               [mk_payload](const exec::Inputs&) -> exec::Value { return mk_payload(); },
               {"camera", "parser"}};
  stages[2] = {"action", v3, exec::VTime::millis(c3),
               [mk_payload](const exec::Inputs&) -> exec::Value { return mk_payload(); },
               {"camera", "scene"}};

  exec::EnvHook env;
  env.initial = [mk_payload]() -> exec::Value { return mk_payload(); };
  env.step = [counter, mk_payload](const exec::Value&, exec::VTime) -> exec::Value {
    ++*counter;
    return mk_payload();
  };

  exec::ExecutionTrace trace;
  if (mode == "sync") {
    const std::int64_t steps = static_cast<std::int64_t>(
        seconds * 1000.0 / static_cast<double>(std::max<std::int64_t>(1, c1 + c2 + c3)));
    trace = exec::run_synchronous(stages, std::max<std::int64_t>(1, steps), env);
  } else {
    exec::ExecutorConfig xc;
    xc.mode = mode == "real" ? exec::ExecMode::RealClock : exec::ExecMode::VirtualClock;
    xc.duration = exec::VTime::of(static_cast<std::int64_t>(seconds * 1000.0), 1000);
    trace = exec::run_pipeline(xc, stages, env);
  }
  if (!trace_path.empty()) exec::write_trace(trace, trace_path);

  const auto metrics = exec::trace_metrics(trace, stages);
  nlohmann::json out{{"mode", mode},
                     {"env_steps", trace.env_steps},
                     {"steps_per_second", metrics.steps_per_second},
                     {"mean_step_period_s", metrics.mean_step_period_s},
                     {"mean_end_to_end_s", metrics.mean_end_to_end_s}};
  for (const auto& [name, sm] : metrics.stages) {
    out["stages"][name] = {{"ticks", sm.ticks},
                           {"skipped", sm.skipped},
                           {"achieved_rate_hz", sm.achieved_rate_hz},
                           {"mean_latency_ms", sm.mean_latency_ms}};
    for (const auto& [mb, v] : sm.mean_staleness) {
      out["stages"][name]["mean_staleness"][mb] = v;
    }
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& axis, const std::string& skill,
               int level, int distractors, int episodes, const std::string& settings_csv,
               const std::string& out_path) {
  auto cfg = harness::load_config(config_path);
  if (cfg.train_dataset.empty()) throw std::runtime_error("ablate: config lacks train_dataset");
  auto dataset = load_dataset(cfg.train_dataset);

  harness::EvalSpec spec;
  spec.skill = sim::skill_from_key(skill);
  spec.level = level;
  spec.distractors = distractors;
  spec.episodes = episodes;

  std::vector<std::string> settings;
  if (!settings_csv.empty()) {
    std::stringstream ss(settings_csv);
    std::string item;
    while (std::getline(ss, item, ',')) settings.push_back(item);
  }
  const auto rows = harness::run_ablation(cfg, dataset, axis, spec, settings);

  nlohmann::json jrows = nlohmann::json::array();
  std::cout << "setting\tsuccess\tstep_ms\tfinal_loss\n";
  for (const auto& r : rows) {
    std::cout << r.setting << "\t" << r.success_rate << "\t" << r.mean_step_wall_ms << "\t"
              << r.final_loss << "\n";
    jrows.push_back(nlohmann::json{{"setting", r.setting},
                                   {"success_rate", r.success_rate},
                                   {"mean_step_wall_ms", r.mean_step_wall_ms},
                                   {"final_loss", r.final_loss}});
  }
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::trunc);
    f << jrows.dump(2) << "\n";
  }
  return 0;
}

int cmd_diag(const std::string& checkpoint, const std::string& dataset_path,
             const std::string& out_path) {
  auto loaded = harness::load_model_checkpoint(checkpoint);
  auto dataset = load_dataset(dataset_path);
  const auto series = harness::diag_feature_distances(*loaded.model, dataset);
  std::ofstream f(out_path, std::ios::trunc);
  if (!f) throw std::runtime_error("diag: cannot open '" + out_path + "'");
  double d1_acc = 0.0, d2_acc = 0.0;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (std::size_t t = 0; t < series[i].d1.size(); ++t) {
      f << nlohmann::json{{"trajectory", i},
                          {"t", t},
                          {"d1", series[i].d1[t]},
                          {"d2", series[i].d2[t]}}
               .dump()
        << "\n";
      d1_acc += series[i].d1[t];
      d2_acc += series[i].d2[t];
      ++n;
    }
  }
  std::cout << "mean d1 " << d1_acc / std::max<std::int64_t>(1, n) << ", mean d2 "
            << d2_acc / std::max<std::int64_t>(1, n) << " over " << n << " steps\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Waypoint-aware world-model manipulation stack"};
  app.require_subcommand(1);

  // gen-data
  std::string tasks = "pick_target", levels = "1", out_path = "dataset.jsonl";
  int episodes = 10, distractors = 2, background = 0;
  double brightness = 1.0;
  std::uint64_t seed = 1;
  auto* gen = app.add_subcommand("gen-data", "Generate expert demonstrations");
  gen->add_option("--tasks", tasks, "Comma-separated skill keys");
  gen->add_option("--episodes", episodes, "Episodes per task");
  gen->add_option("--levels", levels, "Comma-separated instruction levels");
  gen->add_option("--distractors", distractors, "Distractor count for levels >= 2");
  gen->add_option("--background", background, "Background palette id");
  gen->add_option("--brightness", brightness, "Global brightness scale");
  gen->add_option("--seed", seed, "Dataset seed");
  gen->add_option("--out", out_path, "Output dataset path");

  // annotate
  std::string ann_in, ann_out, ann_mode = "waypoint";
  auto* ann = app.add_subcommand("annotate", "Fill waypoint marks and targets");
  ann->add_option("--in", ann_in, "Input dataset")->required();
  ann->add_option("--out", ann_out, "Output dataset")->required();
  ann->add_option("--mode", ann_mode, "waypoint|pac|rsc|next|interval|final");

  // train
  std::string train_cfg;
  auto* tr = app.add_subcommand("train", "Train from a config file");
  tr->add_option("--config", train_cfg, "Config path")->required();

  // eval
  std::string eval_cfg, eval_ckpt, eval_skill = "pick_target";
  int eval_level = 1, eval_distractors = 0, eval_episodes = 50, eval_bg = 0;
  double eval_brightness = 1.0;
  auto* ev = app.add_subcommand("eval", "Closed-loop evaluation");
  ev->add_option("--config", eval_cfg, "Config path")->required();
  ev->add_option("--checkpoint", eval_ckpt, "Checkpoint path")->required();
  ev->add_option("--skill", eval_skill, "Skill key");
  ev->add_option("--level", eval_level, "Instruction level");
  ev->add_option("--distractors", eval_distractors, "Distractors");
  ev->add_option("--episodes", eval_episodes, "Episode count");
  ev->add_option("--background", eval_bg, "Background palette id");
  ev->add_option("--brightness", eval_brightness, "Brightness scale");

  // bench-ahe
  std::int64_t v1 = 3, v2 = 10, v3 = 30, c1 = 0, c2 = 0, c3 = 0;
  double bench_seconds = 10.0;
  std::string bench_mode = "virtual", bench_trace;
  auto* bench = app.add_subcommand("bench-ahe", "Executor schedule benchmark");
  bench->add_option("--v1", v1, "Parser rate (Hz)");
  bench->add_option("--v2", v2, "Scene rate (Hz)");
  bench->add_option("--v3", v3, "Action rate (Hz)");
  bench->add_option("--c1", c1, "Parser cost (ms)");
  bench->add_option("--c2", c2, "Scene cost (ms)");
  bench->add_option("--c3", c3, "Action cost (ms)");
  bench->add_option("--mode", bench_mode, "virtual|real|sync");
  bench->add_option("--seconds", bench_seconds, "Run duration");
  bench->add_option("--trace", bench_trace, "Trace output path (JSONL)");

  // ablate
  std::string abl_cfg, abl_axis = "waypoint-target", abl_skill = "move_a_near_b", abl_settings,
              abl_out;
  int abl_level = 1, abl_distractors = 0, abl_episodes = 30;
  auto* abl = app.add_subcommand("ablate", "Paired-seed ablation runs");
  abl->add_option("--config", abl_cfg, "Config path")->required();
  abl->add_option("--axis", abl_axis, "waypoint-target|sync|scene-loss|action-size");
  abl->add_option("--skill", abl_skill, "Evaluation skill");
  abl->add_option("--level", abl_level, "Evaluation level");
  abl->add_option("--distractors", abl_distractors, "Distractors");
  abl->add_option("--episodes", abl_episodes, "Evaluation episodes");
  abl->add_option("--settings", abl_settings, "Comma-separated settings subset");
  abl->add_option("--out", abl_out, "Comparison table output (JSON)");

  // diag-features
  std::string diag_ckpt, diag_data, diag_out = "feature_distances.jsonl";
  auto* diag = app.add_subcommand("diag-features", "Waypoint feature-distance series");
  diag->add_option("--checkpoint", diag_ckpt, "Checkpoint path")->required();
  diag->add_option("--dataset", diag_data, "Annotated dataset")->required();
  diag->add_option("--out", diag_out, "Series output path (JSONL)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen_data(tasks, episodes, levels, distractors, background, brightness, seed,
                          out_path);
    }
    if (ann->parsed()) return cmd_annotate(ann_in, ann_out, ann_mode);
    if (tr->parsed()) return cmd_train(train_cfg);
    if (ev->parsed()) {
      return cmd_eval(eval_cfg, eval_ckpt, eval_skill, eval_level, eval_distractors, eval_episodes,
                      eval_bg, eval_brightness);
    }
    if (bench->parsed()) {
      return cmd_bench_ahe(v1, v2, v3, c1, c2, c3, bench_mode, bench_seconds, bench_trace);
    }
    if (abl->parsed()) {
      return cmd_ablate(abl_cfg, abl_axis, abl_skill, abl_level, abl_distractors, abl_episodes,
                        abl_settings, abl_out);
    }
    if (diag->parsed()) return cmd_diag(diag_ckpt, diag_data, diag_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
