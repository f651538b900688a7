#pragma once

#include <array>
#include <utility>
#include <vector>

#include "pivot/encoders.hpp"
#include "pivot/layers.hpp"
#include "pivot/types.hpp"

namespace pivot::act {

inline constexpr int kBins = 256;
inline constexpr int kActionDims = 7;

// Per-dimension 256-bin quantile map between continuous actions and class
// indices. Dimensions 0..5 carry quantile edges fitted on training actions;
// dimension 6 (gripper) maps {0,1} onto the bin endpoints {0,255}.
class Discretizer {
 public:
  // Throws std::invalid_argument naming any all-constant dimension.
  static Discretizer fit(const std::vector<Action>& actions);

  std::array<int, kActionDims> encode(const Action& action) const;
  Action decode(const std::array<int, kActionDims>& indices) const;

  // Half-open [lo, hi) edges; 257 per continuous dimension.
  const std::vector<double>& edges(int dim) const { return edges_.at(dim); }
  double bin_width(int dim, int bin) const { return edges_[dim][bin + 1] - edges_[dim][bin]; }

  // Checkpoint integration.
  std::vector<std::pair<std::string, std::vector<double>>> named_blocks() const;
  static Discretizer from_blocks(
      const std::vector<std::pair<std::string, std::vector<double>>>& blocks);

 private:
  std::array<std::vector<double>, 6> edges_;
};

// 7 x 256 unnormalized scores, one row per action dimension.
struct ActionLogits {
  nn::Tensor values{std::vector<std::int64_t>{kActionDims, kBins}};

  std::array<int, kActionDims> argmax() const;
};

// Mean over the 7 dimensions of categorical cross-entropy.
double action_loss(const ActionLogits& logits, const std::array<int, kActionDims>& targets);
std::pair<double, nn::Tensor> action_loss_with_grad(const ActionLogits& logits,
                                                    const std::array<int, kActionDims>& targets);

struct ActionPredictorConfig {
  int dim = 64;
  int layers = 2;   // LA
  int heads = 8;
  int history = 3;  // h
  int tokens = 49;  // n
  double dropout = 0.1;
  int ff_multiple = 4;
};

// Predicted waypoint features prompt the stack through cross-attention;
// image tokens and embedded states self-attend; a learned read-out token
// feeds the 7x256 head.
class ActionPredictor {
 public:
  ActionPredictor(const ActionPredictorConfig& cfg, std::uint64_t param_seed);

  ActionLogits forward(const enc::FeatureMap& waypoint_features,
                       const std::vector<enc::FeatureMap>& history_features,
                       const std::vector<std::array<double, 7>>& state_history,
                       const nn::RunState& rs);
  // Consumes d(loss)/d(logits); returns d(loss)/d(waypoint features) so the
  // action loss reaches the scene predictor.
  nn::Tensor backward(const nn::Tensor& dlogits);

  void register_params(nn::ParamRegistry& reg, const std::string& prefix);
  const ActionPredictorConfig& config() const { return cfg_; }

 private:
  ActionPredictor(const ActionPredictorConfig& cfg, Rng rng);

  ActionPredictorConfig cfg_;
  nn::StateEmbedder state_embedder_;
  nn::Parameter frame_codes_;   // [h+1, d]
  nn::Parameter state_codes_;   // [h+1, d]
  nn::Parameter readout_;       // [1, d]
  std::vector<nn::TransformerLayer> layers_;
  nn::Linear head_;
  std::int64_t seq_len_ = 0;
  std::int64_t ctx_rows_ = 0;
};

}  // namespace pivot::act
