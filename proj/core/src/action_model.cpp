#include "pivot/action_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pivot::act {

using enc::FeatureMap;
using nn::Tensor;

// --------------------------------------------------------------- Discretizer

Discretizer Discretizer::fit(const std::vector<Action>& actions) {
  if (actions.size() < 2) throw std::invalid_argument("discretizer: need at least 2 actions");
  Discretizer d;
  const std::int64_t n = static_cast<std::int64_t>(actions.size());
  std::vector<double> values(actions.size());
  for (int dim = 0; dim < 6; ++dim) {
    for (std::size_t i = 0; i < actions.size(); ++i) values[i] = actions[i].dim(dim);
    std::stable_sort(values.begin(), values.end());
    if (values.front() == values.back()) {
      throw std::invalid_argument("discretizer: dimension " + std::to_string(dim) +
                                  " is constant; cannot fit quantiles");
    }
    auto& e = d.edges_[dim];
    e.resize(kBins + 1);
    for (int k = 0; k < kBins; ++k) {
      e[k] = values[static_cast<std::size_t>(k * n / kBins)];
    }
    e[kBins] = values.back();
    // Heavy ties can collapse adjacent quantiles; nudge to keep the edge
    // array strictly increasing (the equal-count law then holds only for
    // tie-free data, which fit's contract already asks for).
    for (int k = 1; k <= kBins; ++k) {
      if (e[k] <= e[k - 1]) e[k] = std::nextafter(e[k - 1], std::numeric_limits<double>::max());
    }
  }
  return d;
}

std::array<int, kActionDims> Discretizer::encode(const Action& action) const {
  std::array<int, kActionDims> out{};
  for (int dim = 0; dim < 6; ++dim) {
    const auto& e = edges_[dim];
    if (e.empty()) throw std::logic_error("discretizer: not fitted");
    // Half-open [lo, hi): a value equal to an edge belongs to the higher
    // bin; clamping absorbs out-of-range values.
    const double v = action.dim(dim);
    const auto it = std::upper_bound(e.begin(), e.end(), v);
    const int bin = static_cast<int>(it - e.begin()) - 1;
    out[dim] = std::clamp(bin, 0, kBins - 1);
  }
  out[6] = action.gripper.value == 0 ? 0 : kBins - 1;
  return out;
}

Action Discretizer::decode(const std::array<int, kActionDims>& indices) const {
  double v[6];
  for (int dim = 0; dim < 6; ++dim) {
    const int b = indices[dim];
    if (b < 0 || b >= kBins) throw std::out_of_range("discretizer: bin index out of range");
    const auto& e = edges_[dim];
    if (e.empty()) throw std::logic_error("discretizer: not fitted");
    v[dim] = 0.5 * (e[b] + e[b + 1]);
  }
  if (indices[6] < 0 || indices[6] >= kBins) {
    throw std::out_of_range("discretizer: gripper index out of range");
  }
  Action a;
  a.delta = Pose6{v[0], v[1], v[2], v[3], v[4], v[5]};
  a.gripper.value = indices[6] < kBins / 2 ? 0 : 1;
  return a;
}

std::vector<std::pair<std::string, std::vector<double>>> Discretizer::named_blocks() const {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (int dim = 0; dim < 6; ++dim) {
    out.emplace_back("discretizer.dim" + std::to_string(dim) + ".edges", edges_[dim]);
  }
  return out;
}

Discretizer Discretizer::from_blocks(
    const std::vector<std::pair<std::string, std::vector<double>>>& blocks) {
  Discretizer d;
  int found = 0;
  for (const auto& [name, data] : blocks) {
    for (int dim = 0; dim < 6; ++dim) {
      if (name == "discretizer.dim" + std::to_string(dim) + ".edges") {
        if (data.size() != kBins + 1) throw std::runtime_error("discretizer: bad edge block size");
        d.edges_[dim] = data;
        ++found;
      }
    }
  }
  if (found != 6) throw std::runtime_error("discretizer: missing edge blocks");
  return d;
}

// -------------------------------------------------------------- action loss

std::array<int, kActionDims> ActionLogits::argmax() const {
  std::array<int, kActionDims> out{};
  for (int d = 0; d < kActionDims; ++d) {
    int best = 0;
    for (int j = 1; j < kBins; ++j) {
      if (values.at(d, j) > values.at(d, best)) best = j;
    }
    out[d] = best;
  }
  return out;
}

namespace {

void check_targets(const std::array<int, kActionDims>& targets) {
  for (int t : targets) {
    if (t < 0 || t >= kBins) throw std::out_of_range("action_loss: target bin out of range");
  }
}

}  // namespace

double action_loss(const ActionLogits& logits, const std::array<int, kActionDims>& targets) {
  return action_loss_with_grad(logits, targets).first;
}

std::pair<double, Tensor> action_loss_with_grad(const ActionLogits& logits,
                                                const std::array<int, kActionDims>& targets) {
  check_targets(targets);
  Tensor grad({kActionDims, kBins});
  double loss = 0.0;
  const double inv_dims = 1.0 / static_cast<double>(kActionDims);
  for (int d = 0; d < kActionDims; ++d) {
    double m = logits.values.at(d, 0);
    for (int j = 1; j < kBins; ++j) m = std::max(m, logits.values.at(d, j));
    double sum = 0.0;
    for (int j = 0; j < kBins; ++j) sum += std::exp(logits.values.at(d, j) - m);
    const double log_sum = std::log(sum) + m;
    loss += (log_sum - logits.values.at(d, targets[d])) * inv_dims;
    for (int j = 0; j < kBins; ++j) {
      const double p = std::exp(logits.values.at(d, j) - log_sum);
      grad.at(d, j) = (p - (j == targets[d] ? 1.0 : 0.0)) * inv_dims;
    }
  }
  return {loss, std::move(grad)};
}

// ---------------------------------------------------------- ActionPredictor

ActionPredictor::ActionPredictor(const ActionPredictorConfig& cfg, std::uint64_t param_seed)
    : ActionPredictor(cfg, Rng(hash_combine(param_seed, 0xAC7))) {}

ActionPredictor::ActionPredictor(const ActionPredictorConfig& cfg, Rng rng)
    : cfg_(cfg),
      state_embedder_(cfg.dim, rng),
      frame_codes_({cfg.history + 1, cfg.dim}),
      state_codes_({cfg.history + 1, cfg.dim}),
      readout_({1, cfg.dim}),
      head_(cfg.dim, std::int64_t{kActionDims} * kBins, rng) {
  if (cfg.layers < 1) throw std::invalid_argument("action predictor: LA must be >= 1");
  if (cfg.dim % cfg.heads != 0) throw std::invalid_argument("action predictor: heads must divide d");
  for (auto& v : frame_codes_.value.data) v = rng.gauss() * 0.02;
  for (auto& v : state_codes_.value.data) v = rng.gauss() * 0.02;
  for (auto& v : readout_.value.data) v = rng.gauss() * 0.02;
  layers_.reserve(cfg.layers);
  for (int i = 0; i < cfg.layers; ++i) {
    layers_.emplace_back(cfg.dim, cfg.heads, std::int64_t{cfg.ff_multiple} * cfg.dim, cfg.dropout,
                         hash_combine(0xAC, i), rng);
  }
  ctx_rows_ = cfg.tokens;
  seq_len_ = std::int64_t{cfg.history + 1} * cfg.tokens + (cfg.history + 1) + 1;
}

ActionLogits ActionPredictor::forward(const FeatureMap& waypoint_features,
                                      const std::vector<FeatureMap>& history_features,
                                      const std::vector<std::array<double, 7>>& state_history,
                                      const nn::RunState& rs) {
  const int frames = cfg_.history + 1;
  if (static_cast<int>(history_features.size()) != frames) {
    throw std::invalid_argument("action predictor: history must hold h+1 feature maps");
  }
  if (static_cast<int>(state_history.size()) != frames) {
    throw std::invalid_argument("action predictor: state history must hold h+1 states");
  }
  if (waypoint_features.n() != cfg_.tokens || waypoint_features.d() != cfg_.dim) {
    throw std::invalid_argument("action predictor: waypoint feature shape mismatch");
  }

  Tensor states({frames, 7});
  for (int f = 0; f < frames; ++f) {
    for (int j = 0; j < 7; ++j) states.at(f, j) = state_history[f][j];
  }
  Tensor embedded = state_embedder_.forward(states);  // [h+1, d]

  Tensor x({seq_len_, cfg_.dim});
  for (int f = 0; f < frames; ++f) {
    const auto& fm = history_features[f];
    if (fm.n() != cfg_.tokens || fm.d() != cfg_.dim) {
      throw std::invalid_argument("action predictor: history feature shape mismatch");
    }
    for (std::int64_t i = 0; i < cfg_.tokens; ++i) {
      const std::int64_t row = std::int64_t{f} * cfg_.tokens + i;
      for (int j = 0; j < cfg_.dim; ++j) {
        x.at(row, j) = fm.tokens.at(i, j) + frame_codes_.value.at(f, j);
      }
    }
  }
  const std::int64_t state_base = std::int64_t{frames} * cfg_.tokens;
  for (int f = 0; f < frames; ++f) {
    for (int j = 0; j < cfg_.dim; ++j) {
      x.at(state_base + f, j) = embedded.at(f, j) + state_codes_.value.at(f, j);
    }
  }
  for (int j = 0; j < cfg_.dim; ++j) x.at(seq_len_ - 1, j) = readout_.value.at(0, j);

  for (auto& layer : layers_) x = layer.forward(x, waypoint_features.tokens, rs);

  Tensor pooled({1, cfg_.dim});
  for (int j = 0; j < cfg_.dim; ++j) pooled.at(0, j) = x.at(seq_len_ - 1, j);
  Tensor flat = head_.forward(pooled);  // [1, 7*256]
  nn::check_finite(flat, "action_predictor");

  ActionLogits logits;
  for (int d = 0; d < kActionDims; ++d) {
    for (int j = 0; j < kBins; ++j) logits.values.at(d, j) = flat.at(0, d * kBins + j);
  }
  return logits;
}

Tensor ActionPredictor::backward(const Tensor& dlogits) {
  Tensor dflat({1, std::int64_t{kActionDims} * kBins});
  for (int d = 0; d < kActionDims; ++d) {
    for (int j = 0; j < kBins; ++j) dflat.at(0, d * kBins + j) = dlogits.at(d, j);
  }
  Tensor dpooled = head_.backward(dflat);  // [1, d]

  Tensor dx({seq_len_, cfg_.dim});
  for (int j = 0; j < cfg_.dim; ++j) dx.at(seq_len_ - 1, j) = dpooled.at(0, j);

  Tensor dctx({ctx_rows_, cfg_.dim});
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    auto [dprev, dc] = it->backward(dx);
    dx = std::move(dprev);
    dctx += dc;
  }

  const int frames = cfg_.history + 1;
  for (int f = 0; f < frames; ++f) {
    for (std::int64_t i = 0; i < cfg_.tokens; ++i) {
      const std::int64_t row = std::int64_t{f} * cfg_.tokens + i;
      for (int j = 0; j < cfg_.dim; ++j) frame_codes_.grad.at(f, j) += dx.at(row, j);
    }
  }
  const std::int64_t state_base = std::int64_t{frames} * cfg_.tokens;
  Tensor dstates({frames, cfg_.dim});
  for (int f = 0; f < frames; ++f) {
    for (int j = 0; j < cfg_.dim; ++j) {
      dstates.at(f, j) = dx.at(state_base + f, j);
      state_codes_.grad.at(f, j) += dx.at(state_base + f, j);
    }
  }
  state_embedder_.backward(dstates);
  for (int j = 0; j < cfg_.dim; ++j) readout_.grad.at(0, j) += dx.at(seq_len_ - 1, j);

  return dctx;
}

void ActionPredictor::register_params(nn::ParamRegistry& reg, const std::string& prefix) {
  reg.add(&frame_codes_, prefix + ".frame_codes");
  reg.add(&state_codes_, prefix + ".state_codes");
  reg.add(&readout_, prefix + ".readout");
  state_embedder_.register_params(reg, prefix + ".state_embedder");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].register_params(reg, prefix + ".layer" + std::to_string(i));
  }
  head_.register_params(reg, prefix + ".head");
}

}  // namespace pivot::act
