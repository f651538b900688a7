#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pivot/harness.hpp"

namespace pivot::harness {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_line(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  auto as_i = [&] { return std::stoll(value); };
  auto as_u = [&] { return static_cast<std::uint64_t>(std::stoull(value)); };
  auto as_d = [&] { return std::stod(value); };

  if (key == "encoder_seed") cfg.encoder_seed = as_u();
  else if (key == "model_seed") cfg.model_seed = as_u();
  else if (key == "train_seed") cfg.train_seed = as_u();
  else if (key == "data_seed") cfg.data_seed = as_u();
  else if (key == "eval_seed") cfg.eval_seed = as_u();
  else if (key == "dim") cfg.dim = static_cast<int>(as_i());
  else if (key == "scene_layers") cfg.scene_layers = static_cast<int>(as_i());
  else if (key == "action_layers") cfg.action_layers = static_cast<int>(as_i());
  else if (key == "heads") cfg.heads = static_cast<int>(as_i());
  else if (key == "dropout") cfg.dropout = as_d();
  else if (key == "history") cfg.history = static_cast<int>(as_i());
  else if (key == "patch") cfg.patch = static_cast<int>(as_i());
  else if (key == "image_size") cfg.image_size = static_cast<int>(as_i());
  else if (key == "text_table") cfg.text_table = static_cast<int>(as_i());
  else if (key == "learning_rate") cfg.learning_rate = as_d();
  else if (key == "optimizer") cfg.optimizer = value;
  else if (key == "batch_size") cfg.batch_size = static_cast<int>(as_i());
  else if (key == "epochs") cfg.epochs = static_cast<int>(as_i());
  else if (key == "threads") cfg.threads = static_cast<int>(as_i());
  else if (key == "v1") cfg.v1 = as_i();
  else if (key == "v2") cfg.v2 = as_i();
  else if (key == "v3") cfg.v3 = as_i();
  else if (key == "waypoint_target_mode") cfg.waypoint_target_mode = value;
  else if (key == "scene_loss") cfg.scene_loss = value;
  else if (key == "parser_mode") cfg.parser_mode = value;
  else if (key == "vlm_url") cfg.vlm.base_url = value;
  else if (key == "vlm_timeout_ms") cfg.vlm.timeout_ms = static_cast<int>(as_i());
  else if (key == "vlm_max_retries") cfg.vlm.max_retries = static_cast<int>(as_i());
  else if (key == "vlm_model") cfg.vlm.model = value;
  else if (key == "train_dataset") cfg.train_dataset = value;
  else if (key == "eval_dataset") cfg.eval_dataset = value;
  else if (key == "checkpoint_dir") cfg.checkpoint_dir = value;
  else if (key == "metrics_path") cfg.metrics_path = value;
  else if (key == "eval_episodes") cfg.eval_episodes = static_cast<int>(as_i());
  else if (key == "eval_step_cap") cfg.eval_step_cap = as_i();
  else if (key == "eval_mode") cfg.eval_mode = value;
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_config_line(cfg, key, value);
    } catch (const std::exception& e) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (cfg.v1 >= cfg.v2 || cfg.v2 >= cfg.v3) {
    throw std::runtime_error("config: stage rates must satisfy v1 < v2 < v3");
  }
  if (cfg.image_size % cfg.patch != 0) {
    throw std::runtime_error("config: image_size must be a multiple of patch");
  }
  return cfg;
}

}  // namespace pivot::harness
