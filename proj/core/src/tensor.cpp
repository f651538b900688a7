#include "pivot/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pivot::nn {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

CMap cmap(const Tensor& t) { return CMap(t.data.data(), t.rows(), t.cols()); }
Map mmap(Tensor& t) { return Map(t.data.data(), t.rows(), t.cols()); }

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

Tensor Tensor::full(std::vector<std::int64_t> s, double v) {
  Tensor t(std::move(s));
  t.fill(v);
  return t;
}

Tensor Tensor::randn(std::vector<std::int64_t> s, Rng& rng, double scale) {
  Tensor t(std::move(s));
  for (auto& x : t.data) x = rng.gauss() * scale;
  return t;
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor& Tensor::operator+=(const Tensor& o) {
  require(same_shape(o), "tensor +=: shape mismatch");
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& o) {
  require(same_shape(o), "tensor -=: shape mismatch");
  for (std::size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (auto& v : data) v *= s;
  return *this;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.shape.size() == 2 && b.shape.size() == 2 && a.shape[1] == b.shape[0],
          "matmul: incompatible shapes");
  Tensor out({a.shape[0], b.shape[1]});
  mmap(out).noalias() = cmap(a) * cmap(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require(a.shape.size() == 2 && b.shape.size() == 2 && a.shape[1] == b.shape[1],
          "matmul_nt: incompatible shapes");
  Tensor out({a.shape[0], b.shape[0]});
  mmap(out).noalias() = cmap(a) * cmap(b).transpose();
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require(a.shape.size() == 2 && b.shape.size() == 2 && a.shape[0] == b.shape[0],
          "matmul_tn: incompatible shapes");
  Tensor out({a.shape[1], b.shape[1]});
  mmap(out).noalias() = cmap(a).transpose() * cmap(b);
  return out;
}

void softmax_rows_inplace(Tensor& t) {
  const std::int64_t r = t.rows(), c = t.cols();
  for (std::int64_t i = 0; i < r; ++i) {
    double* row = t.data.data() + i * c;
    double m = row[0];
    for (std::int64_t j = 1; j < c; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (std::int64_t j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - m);
      sum += row[j];
    }
    const double inv = 1.0 / sum;
    for (std::int64_t j = 0; j < c; ++j) row[j] *= inv;
  }
}

void check_finite(const Tensor& t, const char* who) {
  if (!t.all_finite()) {
    throw std::runtime_error(std::string(who) + ": non-finite value produced");
  }
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.data) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace pivot::nn
