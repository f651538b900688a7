#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <thread>

#include "pivot/checkpoint.hpp"
#include "pivot/harness.hpp"

namespace pivot::harness {

namespace {

wm::ScenePredictorConfig scene_cfg_of(const ExperimentConfig& cfg) {
  wm::ScenePredictorConfig sc;
  sc.dim = cfg.dim;
  sc.layers = cfg.scene_layers;
  sc.heads = cfg.heads;
  sc.history = cfg.history;
  sc.tokens = cfg.tokens();
  sc.dropout = cfg.dropout;
  return sc;
}

act::ActionPredictorConfig action_cfg_of(const ExperimentConfig& cfg) {
  act::ActionPredictorConfig ac;
  ac.dim = cfg.dim;
  ac.layers = cfg.action_layers;
  ac.heads = cfg.heads;
  ac.history = cfg.history;
  ac.tokens = cfg.tokens();
  ac.dropout = cfg.dropout;
  return ac;
}

enc::EncoderConfig encoder_cfg_of(const ExperimentConfig& cfg) {
  enc::EncoderConfig ec;
  ec.seed = cfg.encoder_seed;
  ec.dim = cfg.dim;
  ec.patch = cfg.patch;
  ec.table_size = cfg.text_table;
  return ec;
}

}  // namespace

PolicyModel::PolicyModel(const ExperimentConfig& config)
    : encoder_cfg(encoder_cfg_of(config)),
      image_encoder(encoder_cfg),
      text_encoder(encoder_cfg),
      scene(scene_cfg_of(config), config.model_seed),
      action(action_cfg_of(config), hash_combine(config.model_seed, 2)),
      loss_kind(config.scene_loss == "squared" ? wm::SceneLossKind::MeanSquaredDistance
                                               : wm::SceneLossKind::MeanTokenDistance),
      cfg(config) {
  scene.register_params(registry, "scene");
  action.register_params(registry, "action");
}

void save_model_checkpoint(const std::string& path, const PolicyModel& model,
                           const act::Discretizer& disc) {
  std::vector<nn::NamedBlock> blocks;
  {
    nn::Tensor meta({16});
    const auto& c = model.cfg;
    meta.data = {1.0,
                 double(c.dim),
                 double(c.scene_layers),
                 double(c.action_layers),
                 double(c.heads),
                 double(c.history),
                 double(c.tokens()),
                 double(c.patch),
                 double(c.image_size),
                 double(c.text_table),
                 double(c.encoder_seed),
                 double(c.model_seed),
                 c.dropout,
                 model.loss_kind == wm::SceneLossKind::MeanSquaredDistance ? 1.0 : 0.0,
                 double(c.v1) * 1e6 + double(c.v2) * 1e3 + double(c.v3),
                 0.0};
    blocks.push_back({"meta", std::move(meta)});
  }
  for (const auto& b : nn::registry_blocks(model.registry)) blocks.push_back(b);
  for (auto& [name, data] : disc.named_blocks()) {
    nn::Tensor t({static_cast<std::int64_t>(data.size())});
    t.data = data;
    blocks.push_back({name, std::move(t)});
  }
  nn::save_checkpoint(path, blocks);
}

LoadedModel load_model_checkpoint(const std::string& path) {
  auto blocks = nn::load_checkpoint(path);
  const nn::Tensor* meta = nullptr;
  for (const auto& b : blocks) {
    if (b.name == "meta") meta = &b.tensor;
  }
  if (!meta || meta->data.size() < 16 || meta->data[0] != 1.0) {
    throw std::runtime_error("checkpoint: missing or unsupported meta block");
  }
  ExperimentConfig cfg;
  cfg.dim = static_cast<int>(meta->data[1]);
  cfg.scene_layers = static_cast<int>(meta->data[2]);
  cfg.action_layers = static_cast<int>(meta->data[3]);
  cfg.heads = static_cast<int>(meta->data[4]);
  cfg.history = static_cast<int>(meta->data[5]);
  cfg.patch = static_cast<int>(meta->data[7]);
  cfg.image_size = static_cast<int>(meta->data[8]);
  cfg.text_table = static_cast<int>(meta->data[9]);
  cfg.encoder_seed = static_cast<std::uint64_t>(meta->data[10]);
  cfg.model_seed = static_cast<std::uint64_t>(meta->data[11]);
  cfg.dropout = meta->data[12];
  cfg.scene_loss = meta->data[13] == 1.0 ? "squared" : "distance";
  const std::int64_t packed = static_cast<std::int64_t>(meta->data[14]);
  cfg.v1 = packed / 1000000;
  cfg.v2 = (packed / 1000) % 1000;
  cfg.v3 = packed % 1000;

  LoadedModel out{std::make_unique<PolicyModel>(cfg), act::Discretizer::from_blocks([&] {
                    std::vector<std::pair<std::string, std::vector<double>>> raw;
                    for (const auto& b : blocks) raw.emplace_back(b.name, b.tensor.data);
                    return raw;
                  }())};
  nn::restore_registry(out.model->registry, blocks);
  return out;
}

std::vector<Trajectory> reannotate(std::vector<Trajectory> dataset, const std::string& mode) {
  wp::WaypointRuleConfig rules;
  wp::TargetMode target = wp::TargetMode::NextWaypoint;
  if (mode == "waypoint") {
  } else if (mode == "pac") {
    rules.use_state_rule = false;
  } else if (mode == "rsc") {
    rules.use_completion_rule = false;
  } else if (mode == "next") {
    target = wp::TargetMode::NextFrame;
  } else if (mode == "interval") {
    target = wp::TargetMode::IntervalFrame;
  } else if (mode == "final") {
    target = wp::TargetMode::FinalFrame;
  } else {
    throw std::invalid_argument("reannotate: unknown mode '" + mode + "'");
  }
  for (auto& traj : dataset) {
    const auto marks = wp::extract_waypoints(traj, rules);
    traj = wp::assign_waypoint_targets(std::move(traj), marks, target);
  }
  return dataset;
}

// ---------------------------------------------------------------- training

namespace {

struct Prepared {
  const Trajectory* traj;
  std::vector<enc::FeatureMap> features;        // one per step
  std::vector<wm::WaypointIndicator> indicators;  // one per step
  std::vector<std::array<double, 7>> states;    // one per step
};

std::array<double, 7> state_vec(const TrajectoryStep& s) {
  return {s.state.x,    s.state.y,     s.state.z,
          s.state.roll, s.state.pitch, s.state.yaw,
          double(s.gripper.value)};
}

Prepared prepare(const Trajectory& traj, const PolicyModel& model) {
  Prepared p;
  p.traj = &traj;
  p.features.reserve(traj.steps.size());
  p.indicators.reserve(traj.steps.size());
  for (const auto& s : traj.steps) {
    p.features.push_back(model.image_encoder.encode(s.observation));
    if (!s.primitive_label) {
      throw std::invalid_argument("train: dataset lacks primitive labels; run annotate first");
    }
    p.indicators.push_back(wm::compose_indicator(
        traj.instruction, prim::from_ref(*s.primitive_label), model.text_encoder));
    p.states.push_back(state_vec(s));
  }
  return p;
}

struct SampleRef {
  const Prepared* traj;
  std::int64_t t;
};

struct LossPair {
  double scene = 0.0;
  double action = 0.0;
  double total() const { return scene + action; }
};

// Forward (and optionally backward) for one step sample; gradients
// accumulate inside the model.
LossPair run_sample(PolicyModel& model, const act::Discretizer& disc, const SampleRef& s,
                    const nn::RunState& rs, bool backprop) {
  const auto& traj = *s.traj;
  const int h = model.cfg.history;
  std::vector<enc::FeatureMap> window;
  std::vector<std::array<double, 7>> states;
  window.reserve(h + 1);
  states.reserve(h + 1);
  for (std::int64_t k = s.t - h; k <= s.t; ++k) {
    const std::int64_t idx = k < 0 ? 0 : k;
    window.push_back(traj.features[idx]);
    states.push_back(traj.states[idx]);
  }
  const auto& step = traj.traj->steps[s.t];
  if (!step.waypoint_target) {
    throw std::invalid_argument("train: step lacks a waypoint target; run annotate first");
  }
  const auto& target_features = traj.features[*step.waypoint_target];

  enc::FeatureMap pred = model.scene.forward(traj.indicators[s.t], window, rs);
  auto [scene_l, dscene] = wm::scene_loss_with_grad(pred, target_features, model.loss_kind);

  act::ActionLogits logits = model.action.forward(pred, window, states, rs);
  const auto bins = disc.encode(*step.action);
  auto [action_l, dlogits] = act::action_loss_with_grad(logits, bins);

  if (backprop) {
    nn::Tensor dpred = model.action.backward(dlogits);
    dpred += dscene;
    model.scene.backward(dpred);
  }
  return {scene_l, action_l};
}

double dataset_loss(PolicyModel& model, const act::Discretizer& disc,
                    const std::vector<SampleRef>& samples, std::size_t limit) {
  nn::RunState rs;  // eval mode
  double acc = 0.0;
  const std::size_t n = std::min(samples.size(), limit);
  for (std::size_t i = 0; i < n; ++i) {
    acc += run_sample(model, disc, samples[i], rs, false).total();
  }
  return acc / static_cast<double>(n);
}

}  // namespace

TrainResult train(const ExperimentConfig& cfg, const std::vector<Trajectory>& dataset,
                  PolicyModel& model) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  // Discretizer fitted on training actions only.
  std::vector<Action> actions;
  for (const auto& traj : dataset) {
    for (const auto& s : traj.steps) {
      if (s.action) actions.push_back(*s.action);
    }
  }
  TrainResult result;
  result.discretizer = act::Discretizer::fit(actions);

  // Frozen encoders: encode every frame once up front.
  std::vector<Prepared> prepared;
  prepared.reserve(dataset.size());
  for (const auto& traj : dataset) prepared.push_back(prepare(traj, model));

  std::vector<SampleRef> samples;
  for (const auto& p : prepared) {
    for (std::int64_t t = 0; t + 1 < p.traj->length(); ++t) samples.push_back({&p, t});
  }
  if (samples.empty()) throw std::invalid_argument("train: no supervised steps");

  const std::size_t loss_probe = 1024;
  result.initial_loss = dataset_loss(model, result.discretizer, samples, loss_probe);

  nn::OptimizerConfig opt_cfg;
  opt_cfg.learning_rate = cfg.learning_rate;
  opt_cfg.algorithm =
      cfg.optimizer == "sgd" ? nn::OptAlgo::GradientDescent : nn::OptAlgo::AdaptiveMoment;
  nn::Optimizer optimizer(opt_cfg, model.registry);

  const int n_threads = std::max(1, cfg.threads);
  std::vector<std::unique_ptr<PolicyModel>> replicas;
  for (int i = 1; i < n_threads; ++i) replicas.push_back(std::make_unique<PolicyModel>(cfg));

  std::ofstream metrics(cfg.metrics_path, std::ios::app);
  Rng shuffle_rng(hash_combine(cfg.train_seed, 0x5FF1E));
  std::uint64_t sample_counter = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto wall0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
    }

    double epoch_scene = 0.0, epoch_action = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::size_t count = stop - start;
      model.registry.zero_grads();
      for (auto& r : replicas) {
        r->registry.zero_grads();
        r->registry.copy_values_from(model.registry);
      }

      std::vector<LossPair> batch_losses(count);
      auto worker = [&](int wi) {
        PolicyModel& m = wi == 0 ? model : *replicas[wi - 1];
        for (std::size_t k = wi; k < count; k += n_threads) {
          nn::RunState rs{true, cfg.train_seed, sample_counter + start + k};
          batch_losses[k] = run_sample(m, result.discretizer, samples[order[start + k]], rs, true);
        }
      };
      if (n_threads == 1) {
        worker(0);
      } else {
        std::vector<std::thread> pool;
        for (int wi = 1; wi < n_threads; ++wi) pool.emplace_back(worker, wi);
        worker(0);
        for (auto& th : pool) th.join();
      }
      // Deterministic reduction: replica grads fold in thread order.
      for (auto& r : replicas) model.registry.add_grads_from(r->registry);
      model.registry.scale_grads(1.0 / static_cast<double>(count));
      optimizer.step(model.registry);

      for (const auto& lp : batch_losses) {
        if (!std::isfinite(lp.total())) {
          throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        epoch_scene += lp.scene;
        epoch_action += lp.action;
      }
      seen += count;
    }
    sample_counter += order.size();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.scene_loss = epoch_scene / static_cast<double>(seen);
    rec.action_loss = epoch_action / static_cast<double>(seen);
    rec.total_loss = rec.scene_loss + rec.action_loss;
    rec.wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    result.epochs.push_back(rec);
    if (metrics) {
      metrics << nlohmann::json{{"kind", "epoch"},
                                {"epoch", rec.epoch},
                                {"scene_loss", rec.scene_loss},
                                {"action_loss", rec.action_loss},
                                {"total_loss", rec.total_loss},
                                {"wall_s", rec.wall_s}}
                     .dump()
              << '\n';
      metrics.flush();
    }
    const std::string ckpt =
        cfg.checkpoint_dir + "/checkpoint_epoch" + std::to_string(epoch) + ".bin";
    save_model_checkpoint(ckpt, model, result.discretizer);
    result.checkpoint_path = ckpt;
  }

  result.final_loss = dataset_loss(model, result.discretizer, samples, loss_probe);
  if (metrics) {
    metrics << nlohmann::json{{"kind", "summary"},
                              {"initial_loss", result.initial_loss},
                              {"final_loss", result.final_loss}}
                   .dump()
            << '\n';
  }
  return result;
}

}  // namespace pivot::harness
