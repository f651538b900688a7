#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pivot/tensor.hpp"
#include "pivot/types.hpp"

namespace pivot::enc {

// n x d grid of token features for one encoded or predicted image.
struct FeatureMap {
  nn::Tensor tokens;  // [n, d]
  std::int64_t n() const { return tokens.shape[0]; }
  std::int64_t d() const { return tokens.shape[1]; }
};

// m x d encoded text.
struct TokenSequence {
  nn::Tensor tokens;  // [m, d]
  std::int64_t m() const { return tokens.shape[0]; }
  std::int64_t d() const { return tokens.shape[1]; }
};

struct EncoderConfig {
  std::uint64_t seed = 7;
  int dim = 64;        // d
  int patch = 8;       // image patch edge
  int table_size = 4096;  // text embedding table entries
};

// Lowercased alphanumeric runs; everything else separates tokens.
std::vector<std::string> tokenize(const std::string& text);

// Frozen image encoder: per-patch pixel statistics through a fixed random
// projection, plus a fixed positional code per token. Pure function of
// (image, seed); no trainable state.
class ImageEncoder {
 public:
  explicit ImageEncoder(const EncoderConfig& cfg);

  FeatureMap encode(const Observation& obs) const;

  int dim() const { return cfg_.dim; }
  int patch() const { return cfg_.patch; }
  // Upper bound on any output token norm, from the projection and code norms.
  double token_norm_bound() const;
  const nn::Tensor& positional_code(int token_index) const { return positional_.at(token_index); }

  static constexpr int kStatsDim = 10;

 private:
  EncoderConfig cfg_;
  nn::Tensor projection_;  // [d, kStatsDim]
  std::vector<nn::Tensor> positional_;  // per token index, [d]
};

// Frozen text encoder: hashed embedding table plus fixed positional codes.
class TextEncoder {
 public:
  explicit TextEncoder(const EncoderConfig& cfg);

  TokenSequence encode(const std::string& text) const;

  int dim() const { return cfg_.dim; }

 private:
  EncoderConfig cfg_;
  nn::Tensor table_;  // [table_size, d]
  std::vector<nn::Tensor> positional_;
};

}  // namespace pivot::enc
