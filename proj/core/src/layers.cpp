#include "pivot/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace pivot::nn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using HeadBlock = Eigen::Map<EMat, 0, Eigen::OuterStride<>>;
using ConstHeadBlock = Eigen::Map<const EMat, 0, Eigen::OuterStride<>>;

// View of one head's dh columns inside a [T, d] tensor.
ConstHeadBlock head_of(const Tensor& t, std::int64_t off, std::int64_t dh) {
  return ConstHeadBlock(t.data.data() + off, t.rows(), dh, Eigen::OuterStride<>(t.cols()));
}
HeadBlock head_of(Tensor& t, std::int64_t off, std::int64_t dh) {
  return HeadBlock(t.data.data() + off, t.rows(), dh, Eigen::OuterStride<>(t.cols()));
}

Eigen::Map<EMat> full(Tensor& t) { return {t.data.data(), t.rows(), t.cols()}; }
Eigen::Map<const EMat> full(const Tensor& t) { return {t.data.data(), t.rows(), t.cols()}; }

}  // namespace

void ParamRegistry::copy_values_from(const ParamRegistry& other) {
  require(params_.size() == other.params_.size(), "registry copy: size mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    require(params_[i]->value.same_shape(other.params_[i]->value), "registry copy: shape mismatch");
    params_[i]->value.data = other.params_[i]->value.data;
  }
}

void ParamRegistry::add_grads_from(const ParamRegistry& other) {
  require(params_.size() == other.params_.size(), "registry grad add: size mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    params_[i]->grad += other.params_[i]->grad;
  }
}

// ---------------------------------------------------------------- Linear

Linear::Linear(std::int64_t in, std::int64_t out, Rng& rng, double init_scale)
    : w({out, in}), b({out}) {
  const double scale = init_scale < 0.0 ? 1.0 / std::sqrt(static_cast<double>(in)) : init_scale;
  for (auto& v : w.value.data) v = rng.gauss() * scale;
}

Tensor Linear::forward(const Tensor& x) {
  require(x.cols() == w.value.shape[1], "linear: input dim mismatch");
  x_cache_ = x;
  Tensor y = matmul_nt(x, w.value);
  const std::int64_t T = y.rows(), out = y.cols();
  for (std::int64_t t = 0; t < T; ++t) {
    for (std::int64_t j = 0; j < out; ++j) y.at(t, j) += b.value.data[j];
  }
  return y;
}

Tensor Linear::backward(const Tensor& dy) {
  w.grad += matmul_tn(dy, x_cache_);
  const std::int64_t T = dy.rows(), out = dy.cols();
  for (std::int64_t t = 0; t < T; ++t) {
    for (std::int64_t j = 0; j < out; ++j) b.grad.data[j] += dy.at(t, j);
  }
  return matmul(dy, w.value);
}

void Linear::register_params(ParamRegistry& reg, const std::string& prefix) {
  reg.add(&w, prefix + ".w");
  reg.add(&b, prefix + ".b");
}

// -------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(std::int64_t dim, double eps) : gain({dim}), bias({dim}), eps_(eps) {
  gain.value.fill(1.0);
}

Tensor LayerNorm::forward(const Tensor& x) {
  const std::int64_t T = x.rows(), d = x.cols();
  Tensor y({T, d});
  xhat_cache_ = Tensor({T, d});
  rstd_cache_.assign(T, 0.0);
  for (std::int64_t t = 0; t < T; ++t) {
    const double* row = x.data.data() + t * d;
    double mean = 0.0;
    for (std::int64_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double c = row[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + eps_);
    rstd_cache_[t] = rstd;
    for (std::int64_t j = 0; j < d; ++j) {
      const double xh = (row[j] - mean) * rstd;
      xhat_cache_.at(t, j) = xh;
      y.at(t, j) = xh * gain.value.data[j] + bias.value.data[j];
    }
  }
  return y;
}

Tensor LayerNorm::backward(const Tensor& dy) {
  const std::int64_t T = dy.rows(), d = dy.cols();
  Tensor dx({T, d});
  for (std::int64_t t = 0; t < T; ++t) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double g = dy.at(t, j) * gain.value.data[j];
      sum_g += g;
      sum_gx += g * xhat_cache_.at(t, j);
      gain.grad.data[j] += dy.at(t, j) * xhat_cache_.at(t, j);
      bias.grad.data[j] += dy.at(t, j);
    }
    const double inv_d = 1.0 / static_cast<double>(d);
    for (std::int64_t j = 0; j < d; ++j) {
      const double g = dy.at(t, j) * gain.value.data[j];
      dx.at(t, j) = rstd_cache_[t] * (g - inv_d * sum_g - xhat_cache_.at(t, j) * inv_d * sum_gx);
    }
  }
  return dx;
}

void LayerNorm::register_params(ParamRegistry& reg, const std::string& prefix) {
  reg.add(&gain, prefix + ".gain");
  reg.add(&bias, prefix + ".bias");
}

// ------------------------------------------------------------------ Gelu

Tensor Gelu::forward(const Tensor& x) {
  x_cache_ = x;
  Tensor y = x;
  for (auto& v : y.data) v = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  return y;
}

Tensor Gelu::backward(const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.data.size(); ++i) {
    const double x = x_cache_.data[i];
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    dx.data[i] *= cdf + x * pdf;
  }
  return dx;
}

// --------------------------------------------------------------- Dropout

Dropout::Dropout(double rate, std::uint64_t stream_id) : rate_(rate), stream_id_(stream_id) {
  require(rate >= 0.0 && rate < 1.0, "dropout rate must be in [0,1)");
}

Tensor Dropout::forward(const Tensor& x, const RunState& rs) {
  if (!rs.train || rate_ == 0.0) {
    active_ = false;
    return x;
  }
  active_ = true;
  mask_.assign(x.data.size(), 0);
  Tensor y = x;
  const double keep = 1.0 - rate_;
  const double inv_keep = 1.0 / keep;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    if (counter_uniform(rs.seed, rs.step, stream_id_, i) < keep) {
      mask_[i] = 1;
      y.data[i] *= inv_keep;
    } else {
      y.data[i] = 0.0;
    }
  }
  return y;
}

Tensor Dropout::backward(const Tensor& dy) {
  if (!active_) return dy;
  Tensor dx = dy;
  const double inv_keep = 1.0 / (1.0 - rate_);
  for (std::size_t i = 0; i < dx.data.size(); ++i) {
    dx.data[i] = mask_[i] ? dx.data[i] * inv_keep : 0.0;
  }
  return dx;
}

// ------------------------------------------------------------- Attention

Tensor attention_forward(const Tensor& q, const Tensor& k, const Tensor& v, int heads) {
  require(q.shape.size() == 2 && k.shape.size() == 2 && v.shape.size() == 2,
          "attention: rank-2 operands required");
  const std::int64_t d = q.cols();
  require(d == k.cols() && d == v.cols(), "attention: dim mismatch");
  require(k.rows() == v.rows(), "attention: key/value length mismatch");
  require(heads > 0 && d % heads == 0, "attention: heads must divide dim");

  const std::int64_t Tq = q.rows(), Tk = k.rows(), dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor out({Tq, d});
  Tensor scores({Tq, Tk});
  for (int h = 0; h < heads; ++h) {
    const std::int64_t off = h * dh;
    full(scores).noalias() = head_of(q, off, dh) * head_of(k, off, dh).transpose() * scale;
    softmax_rows_inplace(scores);
    head_of(out, off, dh).noalias() = full(scores) * head_of(v, off, dh);
  }
  check_finite(out, "attention_forward");
  return out;
}

MultiHeadAttention::MultiHeadAttention(std::int64_t dim, int heads_in, Rng& rng)
    : wq(dim, dim, rng), wk(dim, dim, rng), wv(dim, dim, rng), wo(dim, dim, rng), heads(heads_in) {
  require(heads > 0 && dim % heads == 0, "attention: heads must divide dim");
}

Tensor MultiHeadAttention::forward(const Tensor& x, const Tensor& kv) {
  q_ = wq.forward(x);
  k_ = wk.forward(kv);
  v_ = wv.forward(kv);
  const std::int64_t Tq = q_.rows(), Tk = k_.rows(), d = q_.cols(), dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  att_.assign(heads, Tensor({Tq, Tk}));
  Tensor mixed({Tq, d});
  for (int h = 0; h < heads; ++h) {
    const std::int64_t off = h * dh;
    Tensor& att = att_[h];
    full(att).noalias() = head_of(q_, off, dh) * head_of(k_, off, dh).transpose() * scale;
    softmax_rows_inplace(att);
    head_of(mixed, off, dh).noalias() = full(att) * head_of(v_, off, dh);
  }
  Tensor y = wo.forward(mixed);
  check_finite(y, "multi_head_attention");
  return y;
}

std::pair<Tensor, Tensor> MultiHeadAttention::backward(const Tensor& dy) {
  const std::int64_t Tq = q_.rows(), Tk = k_.rows(), d = q_.cols(), dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor dmixed = wo.backward(dy);
  Tensor dq({Tq, d}), dk({Tk, d}), dv({Tk, d});
  Tensor datt({Tq, Tk});
  for (int h = 0; h < heads; ++h) {
    const std::int64_t off = h * dh;
    const Tensor& att = att_[h];
    full(datt).noalias() = head_of(dmixed, off, dh) * head_of(v_, off, dh).transpose();
    head_of(dv, off, dh).noalias() = full(att).transpose() * head_of(dmixed, off, dh);
    // Softmax backward: ds = att * (datt - rowdot(datt, att)), folded with the scale.
    for (std::int64_t i = 0; i < Tq; ++i) {
      double dot = 0.0;
      for (std::int64_t j = 0; j < Tk; ++j) dot += datt.at(i, j) * att.at(i, j);
      for (std::int64_t j = 0; j < Tk; ++j) {
        datt.at(i, j) = att.at(i, j) * (datt.at(i, j) - dot) * scale;
      }
    }
    head_of(dq, off, dh).noalias() = full(datt) * head_of(k_, off, dh);
    head_of(dk, off, dh).noalias() = full(datt).transpose() * head_of(q_, off, dh);
  }
  Tensor dx = wq.backward(dq);
  Tensor dkv = wk.backward(dk);
  dkv += wv.backward(dv);
  return {std::move(dx), std::move(dkv)};
}

void MultiHeadAttention::register_params(ParamRegistry& reg, const std::string& prefix) {
  wq.register_params(reg, prefix + ".wq");
  wk.register_params(reg, prefix + ".wk");
  wv.register_params(reg, prefix + ".wv");
  wo.register_params(reg, prefix + ".wo");
}

// ------------------------------------------------------------ FeedForward

FeedForward::FeedForward(std::int64_t dim, std::int64_t hidden, Rng& rng)
    : fc1(dim, hidden, rng), fc2(hidden, dim, rng) {}

Tensor FeedForward::forward(const Tensor& x) { return fc2.forward(act_.forward(fc1.forward(x))); }

Tensor FeedForward::backward(const Tensor& dy) {
  return fc1.backward(act_.backward(fc2.backward(dy)));
}

void FeedForward::register_params(ParamRegistry& reg, const std::string& prefix) {
  fc1.register_params(reg, prefix + ".fc1");
  fc2.register_params(reg, prefix + ".fc2");
}

// ------------------------------------------------------- TransformerLayer

TransformerLayer::TransformerLayer(std::int64_t dim, int heads, std::int64_t ff_hidden,
                                   double dropout, std::uint64_t stream_base, Rng& rng)
    : ln1(dim),
      ln2(dim),
      ln3(dim),
      self_attn(dim, heads, rng),
      cross_attn(dim, heads, rng),
      ff(dim, ff_hidden, rng),
      drop1(dropout, hash_combine(stream_base, 1)),
      drop2(dropout, hash_combine(stream_base, 2)),
      drop3(dropout, hash_combine(stream_base, 3)) {}

Tensor TransformerLayer::forward(const Tensor& x, const Tensor& context, const RunState& rs) {
  Tensor n1 = ln1.forward(x);
  Tensor a = drop1.forward(self_attn.forward(n1, n1), rs);
  a += x;
  Tensor b = drop2.forward(cross_attn.forward(ln2.forward(a), context), rs);
  b += a;
  Tensor y = drop3.forward(ff.forward(ln3.forward(b)), rs);
  y += b;
  check_finite(y, "transformer_layer");
  return y;
}

std::pair<Tensor, Tensor> TransformerLayer::backward(const Tensor& dy) {
  // y = b + drop3(ff(ln3(b)))
  Tensor db = ln3.backward(ff.backward(drop3.backward(dy)));
  db += dy;
  // b = a + drop2(cross(ln2(a), ctx))
  auto [dn2, dctx] = cross_attn.backward(drop2.backward(db));
  Tensor da = ln2.backward(dn2);
  da += db;
  // a = x + drop1(self(n1, n1))
  auto [dq, dkv] = self_attn.backward(drop1.backward(da));
  dq += dkv;
  Tensor dx = ln1.backward(dq);
  dx += da;
  return {std::move(dx), std::move(dctx)};
}

void TransformerLayer::register_params(ParamRegistry& reg, const std::string& prefix) {
  ln1.register_params(reg, prefix + ".ln1");
  self_attn.register_params(reg, prefix + ".self_attn");
  ln2.register_params(reg, prefix + ".ln2");
  cross_attn.register_params(reg, prefix + ".cross_attn");
  ln3.register_params(reg, prefix + ".ln3");
  ff.register_params(reg, prefix + ".ff");
}

// --------------------------------------------------------- StateEmbedder

StateEmbedder::StateEmbedder(std::int64_t dim, Rng& rng) : fc1(7, dim, rng), fc2(dim, dim, rng) {}

Tensor StateEmbedder::forward(const Tensor& states) {
  require(states.cols() == 7, "state embedder: expects [T,7] input");
  return fc2.forward(act_.forward(fc1.forward(states)));
}

Tensor StateEmbedder::backward(const Tensor& dy) {
  return fc1.backward(act_.backward(fc2.backward(dy)));
}

void StateEmbedder::register_params(ParamRegistry& reg, const std::string& prefix) {
  fc1.register_params(reg, prefix + ".fc1");
  fc2.register_params(reg, prefix + ".fc2");
}

}  // namespace pivot::nn
