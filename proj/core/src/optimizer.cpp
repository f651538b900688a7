#include "pivot/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace pivot::nn {

Optimizer::Optimizer(const OptimizerConfig& cfg, const ParamRegistry& reg) : cfg_(cfg) {
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("optimizer: learning rate must be > 0");
  if (cfg.algorithm == OptAlgo::AdaptiveMoment) {
    m_.reserve(reg.all().size());
    v_.reserve(reg.all().size());
    for (const auto* p : reg.all()) {
      m_.push_back(Tensor::zeros(p->value.shape));
      v_.push_back(Tensor::zeros(p->value.shape));
    }
  }
}

void Optimizer::step(ParamRegistry& reg) {
  ++t_;
  const auto& params = reg.all();
  if (cfg_.algorithm == OptAlgo::GradientDescent) {
    for (auto* p : params) {
      if (!p->grad.same_shape(p->value)) throw std::invalid_argument("optimizer: shape mismatch");
      for (std::size_t i = 0; i < p->value.data.size(); ++i) {
        p->value.data[i] -= cfg_.learning_rate * p->grad.data[i];
      }
    }
    return;
  }
  if (params.size() != m_.size()) throw std::invalid_argument("optimizer: registry changed size");
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto* p = params[k];
    if (!p->grad.same_shape(p->value)) throw std::invalid_argument("optimizer: shape mismatch");
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p->value.data.size(); ++i) {
      const double g = p->grad.data[i];
      m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g;
      v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p->value.data[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace pivot::nn
