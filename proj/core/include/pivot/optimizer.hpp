#pragma once

#include <vector>

#include "pivot/layers.hpp"

namespace pivot::nn {

enum class OptAlgo { GradientDescent, AdaptiveMoment };

struct OptimizerConfig {
  double learning_rate = 3e-4;
  OptAlgo algorithm = OptAlgo::AdaptiveMoment;
  // Adaptive-moment constants; ignored in plain mode.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Applies one update from the accumulated grads in the registry.
// Plain mode: p <- p - lr * g. Adaptive mode: bias-corrected first/second
// moment estimates, p <- p - lr * m_hat / (sqrt(v_hat) + eps).
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, const ParamRegistry& reg);

  void step(ParamRegistry& reg);
  std::int64_t steps_taken() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace pivot::nn
