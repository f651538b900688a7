#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "pivot/rng.hpp"

namespace pivot::nn {

// Dense row-major f64 tensor. Mostly used rank-2; rank-1 treated as a row.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> s) : shape(std::move(s)), data(numel_of(shape), 0.0) {}

  static std::int64_t numel_of(const std::vector<std::int64_t>& s) {
    std::int64_t n = 1;
    for (auto e : s) n *= e;
    return n;
  }

  static Tensor zeros(std::vector<std::int64_t> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<std::int64_t> s, double v);
  static Tensor randn(std::vector<std::int64_t> s, Rng& rng, double scale = 1.0);

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  std::int64_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::int64_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }

  double& at(std::int64_t i, std::int64_t j) { return data[i * cols() + j]; }
  double at(std::int64_t i, std::int64_t j) const { return data[i * cols() + j]; }

  void fill(double v);
  void zero() { fill(0.0); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;

  Tensor& operator+=(const Tensor& o);
  Tensor& operator-=(const Tensor& o);
  Tensor& operator*=(double s);
};

// out = a @ b for rank-2 operands; shapes [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);
// out = a @ b^T; shapes [m,k] x [n,k] -> [m,n].
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// out = a^T @ b; shapes [m,k] x [m,n] -> [k,n].
Tensor matmul_tn(const Tensor& a, const Tensor& b);

// Row-wise softmax over the last dimension of a rank-2 tensor.
void softmax_rows_inplace(Tensor& t);

// Throws std::runtime_error naming `who` if any entry is non-finite.
void check_finite(const Tensor& t, const char* who);

double max_abs(const Tensor& t);

}  // namespace pivot::nn
