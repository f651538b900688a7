#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pivot/tensor.hpp"

namespace pivot::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  explicit Parameter(std::vector<std::int64_t> shape)
      : value(Tensor::zeros(shape)), grad(Tensor::zeros(shape)) {}
};

// Flat view over a model's trainable parameters, in registration order.
// Registration order is the checkpoint block order and must stay stable.
class ParamRegistry {
 public:
  void add(Parameter* p, const std::string& name) {
    p->name = name;
    params_.push_back(p);
  }
  const std::vector<Parameter*>& all() const { return params_; }
  std::int64_t total_size() const {
    std::int64_t n = 0;
    for (auto* p : params_) n += p->value.numel();
    return n;
  }
  void zero_grads() {
    for (auto* p : params_) p->grad.zero();
  }
  void copy_values_from(const ParamRegistry& other);
  void add_grads_from(const ParamRegistry& other);
  void scale_grads(double s) {
    for (auto* p : params_) p->grad *= s;
  }

 private:
  std::vector<Parameter*> params_;
};

// Per-call run mode. step keys the dropout masks; with train=false dropout
// is a no-op and forwards are deterministic.
struct RunState {
  bool train = false;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

// y = x W^T + b with W [out, in].
class Linear {
 public:
  Linear(std::int64_t in, std::int64_t out, Rng& rng, double init_scale = -1.0);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Parameter w, b;

 private:
  Tensor x_cache_;
};

class LayerNorm {
 public:
  explicit LayerNorm(std::int64_t dim, double eps = 1e-5);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Parameter gain, bias;

 private:
  double eps_;
  Tensor xhat_cache_;
  std::vector<double> rstd_cache_;
};

// Exact erf-based GELU.
class Gelu {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  Tensor x_cache_;
};

// Inverted dropout with a counter-based mask keyed by (seed, step, id).
class Dropout {
 public:
  Dropout(double rate, std::uint64_t stream_id);

  Tensor forward(const Tensor& x, const RunState& rs);
  Tensor backward(const Tensor& dy);

  double rate() const { return rate_; }

 private:
  double rate_;
  std::uint64_t stream_id_;
  bool active_ = false;
  std::vector<std::uint8_t> mask_;
};

// Scaled dot-product attention over pre-projected q/k/v, split into heads.
// q [Tq,d], k [Tk,d], v [Tk,d] -> [Tq,d].
Tensor attention_forward(const Tensor& q, const Tensor& k, const Tensor& v, int heads);

class MultiHeadAttention {
 public:
  MultiHeadAttention(std::int64_t dim, int heads, Rng& rng);

  // kv == x gives self-attention.
  Tensor forward(const Tensor& x, const Tensor& kv);
  // Returns (dx, dkv); for self-attention add both into the input grad.
  std::pair<Tensor, Tensor> backward(const Tensor& dy);
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Linear wq, wk, wv, wo;
  int heads;

 private:
  Tensor q_, k_, v_;
  std::vector<Tensor> att_;  // one [Tq,Tk] per head
};

class FeedForward {
 public:
  FeedForward(std::int64_t dim, std::int64_t hidden, Rng& rng);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Linear fc1, fc2;

 private:
  Gelu act_;
};

// Pre-norm block: self-attention, cross-attention, feed-forward, each with
// a residual connection and dropout on the sublayer output.
class TransformerLayer {
 public:
  TransformerLayer(std::int64_t dim, int heads, std::int64_t ff_hidden, double dropout,
                   std::uint64_t stream_base, Rng& rng);

  Tensor forward(const Tensor& x, const Tensor& context, const RunState& rs);
  // Returns (dx, dcontext).
  std::pair<Tensor, Tensor> backward(const Tensor& dy);
  void register_params(ParamRegistry& reg, const std::string& prefix);

  LayerNorm ln1, ln2, ln3;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ff;
  Dropout drop1, drop2, drop3;
};

// Trainable MLP lifting a 7-vector robot state into model space.
class StateEmbedder {
 public:
  StateEmbedder(std::int64_t dim, Rng& rng);

  Tensor forward(const Tensor& states);  // [T,7] -> [T,d]
  Tensor backward(const Tensor& dy);
  void register_params(ParamRegistry& reg, const std::string& prefix);

  Linear fc1, fc2;

 private:
  Gelu act_;
};

}  // namespace pivot::nn
