#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pivot/encoders.hpp"
#include "pivot/layers.hpp"
#include "pivot/primitives.hpp"

namespace pivot::wm {

// Instruction text fused with the parsed primitive's description, encoded
// once; the scene predictor consumes it through cross-attention.
struct WaypointIndicator {
  std::string instruction;
  std::string primitive_text;
  enc::TokenSequence encoded;

  std::string composed_text() const { return instruction + " [SEP] " + primitive_text; }
};

WaypointIndicator compose_indicator(const std::string& instruction,
                                    const prim::PrimitiveAction& primitive,
                                    const enc::TextEncoder& text_encoder);

enum class SceneLossKind { MeanTokenDistance, MeanSquaredDistance };

// Mean over tokens of per-token distance between predicted and target maps.
double scene_loss(const enc::FeatureMap& predicted, const enc::FeatureMap& target,
                  SceneLossKind kind = SceneLossKind::MeanTokenDistance);

// Loss plus d(loss)/d(predicted), used by the composed training graph.
std::pair<double, nn::Tensor> scene_loss_with_grad(
    const enc::FeatureMap& predicted, const enc::FeatureMap& target,
    SceneLossKind kind = SceneLossKind::MeanTokenDistance);

struct ScenePredictorConfig {
  int dim = 64;
  int layers = 2;   // LS
  int heads = 8;
  int history = 3;  // h
  int tokens = 49;  // n
  double dropout = 0.1;
  int ff_multiple = 4;
};

// History frames are concatenated along the token axis with learned
// frame-index codes; the last frame's n output slots are the prediction.
class ScenePredictor {
 public:
  ScenePredictor(const ScenePredictorConfig& cfg, std::uint64_t param_seed);

  enc::FeatureMap forward(const WaypointIndicator& indicator,
                          const std::vector<enc::FeatureMap>& history_features,
                          const nn::RunState& rs);
  // Consumes d(loss)/d(prediction); parameter grads accumulate internally.
  void backward(const nn::Tensor& dpred);

  void register_params(nn::ParamRegistry& reg, const std::string& prefix);
  const ScenePredictorConfig& config() const { return cfg_; }

 private:
  ScenePredictorConfig cfg_;
  nn::Parameter frame_codes_;  // [h+1, d]
  std::vector<nn::TransformerLayer> layers_;
  std::int64_t total_tokens_ = 0;
};

}  // namespace pivot::wm
