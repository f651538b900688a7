#include "pivot/worldmodel.hpp"

#include <cmath>
#include <stdexcept>

namespace pivot::wm {

using enc::FeatureMap;
using nn::Tensor;

WaypointIndicator compose_indicator(const std::string& instruction,
                                    const prim::PrimitiveAction& primitive,
                                    const enc::TextEncoder& text_encoder) {
  if (instruction.empty()) throw std::invalid_argument("compose_indicator: empty instruction");
  prim::validate(primitive);
  WaypointIndicator ind;
  ind.instruction = instruction;
  ind.primitive_text = prim::primitive_text(primitive);
  ind.encoded = text_encoder.encode(ind.composed_text());
  return ind;
}

namespace {

void check_pair(const FeatureMap& a, const FeatureMap& b) {
  if (a.n() != b.n() || a.d() != b.d()) {
    throw std::invalid_argument("scene_loss: feature map shape mismatch");
  }
}

}  // namespace

double scene_loss(const FeatureMap& predicted, const FeatureMap& target, SceneLossKind kind) {
  check_pair(predicted, target);
  const std::int64_t n = predicted.n(), d = predicted.d();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double diff = predicted.tokens.at(i, j) - target.tokens.at(i, j);
      sq += diff * diff;
    }
    acc += kind == SceneLossKind::MeanTokenDistance ? std::sqrt(sq) : sq;
  }
  return acc / static_cast<double>(n);
}

std::pair<double, Tensor> scene_loss_with_grad(const FeatureMap& predicted,
                                               const FeatureMap& target, SceneLossKind kind) {
  check_pair(predicted, target);
  const std::int64_t n = predicted.n(), d = predicted.d();
  Tensor grad({n, d});
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double diff = predicted.tokens.at(i, j) - target.tokens.at(i, j);
      sq += diff * diff;
    }
    if (kind == SceneLossKind::MeanTokenDistance) {
      const double dist = std::sqrt(sq);
      acc += dist;
      // d|v|/dv = v/|v|; the gradient is left at zero for a zero-distance
      // token (subgradient).
      if (dist > 1e-12) {
        const double scale = 1.0 / (dist * static_cast<double>(n));
        for (std::int64_t j = 0; j < d; ++j) {
          grad.at(i, j) = (predicted.tokens.at(i, j) - target.tokens.at(i, j)) * scale;
        }
      }
    } else {
      acc += sq;
      const double scale = 2.0 / static_cast<double>(n);
      for (std::int64_t j = 0; j < d; ++j) {
        grad.at(i, j) = (predicted.tokens.at(i, j) - target.tokens.at(i, j)) * scale;
      }
    }
  }
  return {acc / static_cast<double>(n), std::move(grad)};
}

// ------------------------------------------------------------ ScenePredictor

ScenePredictor::ScenePredictor(const ScenePredictorConfig& cfg, std::uint64_t param_seed)
    : cfg_(cfg), frame_codes_({cfg.history + 1, cfg.dim}) {
  if (cfg.layers < 1) throw std::invalid_argument("scene predictor: LS must be >= 1");
  if (cfg.dim % cfg.heads != 0) throw std::invalid_argument("scene predictor: heads must divide d");
  Rng rng(hash_combine(param_seed, 0xA5A5));
  for (auto& v : frame_codes_.value.data) v = rng.gauss() * 0.02;
  layers_.reserve(cfg.layers);
  for (int i = 0; i < cfg.layers; ++i) {
    layers_.emplace_back(cfg.dim, cfg.heads, std::int64_t{cfg.ff_multiple} * cfg.dim, cfg.dropout,
                         hash_combine(0x5C, i), rng);
  }
  total_tokens_ = std::int64_t{cfg.history + 1} * cfg.tokens;
}

FeatureMap ScenePredictor::forward(const WaypointIndicator& indicator,
                                   const std::vector<FeatureMap>& history_features,
                                   const nn::RunState& rs) {
  if (static_cast<int>(history_features.size()) != cfg_.history + 1) {
    throw std::invalid_argument("scene predictor: history must hold h+1 feature maps");
  }
  Tensor x({total_tokens_, cfg_.dim});
  for (int f = 0; f <= cfg_.history; ++f) {
    const auto& fm = history_features[f];
    if (fm.n() != cfg_.tokens || fm.d() != cfg_.dim) {
      throw std::invalid_argument("scene predictor: feature map shape mismatch");
    }
    for (std::int64_t i = 0; i < cfg_.tokens; ++i) {
      const std::int64_t row = std::int64_t{f} * cfg_.tokens + i;
      for (int j = 0; j < cfg_.dim; ++j) {
        x.at(row, j) = fm.tokens.at(i, j) + frame_codes_.value.at(f, j);
      }
    }
  }
  if (indicator.encoded.d() != cfg_.dim) {
    throw std::invalid_argument("scene predictor: indicator dim mismatch");
  }
  for (auto& layer : layers_) x = layer.forward(x, indicator.encoded.tokens, rs);
  nn::check_finite(x, "scene_predictor");

  FeatureMap out;
  out.tokens = Tensor({cfg_.tokens, cfg_.dim});
  const std::int64_t base = std::int64_t{cfg_.history} * cfg_.tokens;
  for (std::int64_t i = 0; i < cfg_.tokens; ++i) {
    for (int j = 0; j < cfg_.dim; ++j) out.tokens.at(i, j) = x.at(base + i, j);
  }
  return out;
}

void ScenePredictor::backward(const Tensor& dpred) {
  Tensor dx({total_tokens_, cfg_.dim});
  const std::int64_t base = std::int64_t{cfg_.history} * cfg_.tokens;
  for (std::int64_t i = 0; i < cfg_.tokens; ++i) {
    for (int j = 0; j < cfg_.dim; ++j) dx.at(base + i, j) = dpred.at(i, j);
  }
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    auto [dprev, dctx] = it->backward(dx);
    dx = std::move(dprev);
    // Indicator context comes from the frozen text encoder; its gradient
    // stops here.
  }
  for (int f = 0; f <= cfg_.history; ++f) {
    for (std::int64_t i = 0; i < cfg_.tokens; ++i) {
      const std::int64_t row = std::int64_t{f} * cfg_.tokens + i;
      for (int j = 0; j < cfg_.dim; ++j) {
        frame_codes_.grad.at(f, j) += dx.at(row, j);
      }
    }
  }
}

void ScenePredictor::register_params(nn::ParamRegistry& reg, const std::string& prefix) {
  reg.add(&frame_codes_, prefix + ".frame_codes");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].register_params(reg, prefix + ".layer" + std::to_string(i));
  }
}

}  // namespace pivot::wm
