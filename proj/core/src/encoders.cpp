#include "pivot/encoders.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace pivot::enc {

using nn::Tensor;

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<Tensor> make_positional(std::uint64_t seed, int count, int dim, double scale) {
  std::vector<Tensor> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng(hash_combine(seed, 0x9070ULL + static_cast<std::uint64_t>(i)));
    out.push_back(Tensor::randn({dim}, rng, scale));
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------ ImageEncoder

ImageEncoder::ImageEncoder(const EncoderConfig& cfg) : cfg_(cfg) {
  Rng rng(hash_combine(cfg.seed, 0x1111));
  projection_ = Tensor::randn({cfg.dim, kStatsDim}, rng, 1.0 / std::sqrt(double(kStatsDim)));
  // Enough codes for a 16x16 patch grid; larger images are rejected up front.
  positional_ = make_positional(hash_combine(cfg.seed, 0x2222), 256, cfg.dim, 0.5);
}

double ImageEncoder::token_norm_bound() const {
  // token = P s + pos with every statistic in [0,1], so
  // |token| <= |P|_F * sqrt(stats) + max_i |pos_i|.
  double pf = 0.0;
  for (double v : projection_.data) pf += v * v;
  double pos_max = 0.0;
  for (const auto& p : positional_) {
    double n = 0.0;
    for (double v : p.data) n += v * v;
    pos_max = std::max(pos_max, n);
  }
  return std::sqrt(pf) * std::sqrt(double(kStatsDim)) + std::sqrt(pos_max);
}

FeatureMap ImageEncoder::encode(const Observation& obs) const {
  const int p = cfg_.patch;
  if (obs.height <= 0 || obs.width <= 0 || obs.height % p != 0 || obs.width % p != 0) {
    throw std::invalid_argument("image encoder: dimensions must be positive multiples of patch");
  }
  if (static_cast<std::int64_t>(obs.rgb.size()) != std::int64_t{3} * obs.height * obs.width) {
    throw std::invalid_argument("image encoder: rgb byte count mismatch");
  }
  const int gh = obs.height / p, gw = obs.width / p;
  const int n = gh * gw;
  if (n > static_cast<int>(positional_.size())) {
    throw std::invalid_argument("image encoder: token grid exceeds positional code table");
  }

  FeatureMap fm;
  fm.tokens = Tensor({n, cfg_.dim});
  double stats[kStatsDim];
  for (int gy = 0; gy < gh; ++gy) {
    for (int gx = 0; gx < gw; ++gx) {
      // Per-channel mean and stddev, intensity centroid, gradient energy;
      // every statistic lands in [0,1].
      double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
      double wsum = 0.0, cx = 0.0, cy = 0.0, gx_acc = 0.0, gy_acc = 0.0;
      for (int y = 0; y < p; ++y) {
        for (int x = 0; x < p; ++x) {
          const int py = gy * p + y, px = gx * p + x;
          const std::size_t base = (static_cast<std::size_t>(py) * obs.width + px) * 3;
          double inten = 0.0;
          for (int c = 0; c < 3; ++c) {
            const double v = obs.rgb[base + c] / 255.0;
            sum[c] += v;
            sq[c] += v * v;
            inten += v;
          }
          inten /= 3.0;
          wsum += inten;
          cx += inten * (x + 0.5) / p;
          cy += inten * (y + 0.5) / p;
          if (x + 1 < p) {
            const std::size_t nb = base + 3;
            double ni = (obs.rgb[nb] + obs.rgb[nb + 1] + obs.rgb[nb + 2]) / (3.0 * 255.0);
            gx_acc += std::abs(ni - inten);
          }
          if (y + 1 < p) {
            const std::size_t nb = base + static_cast<std::size_t>(obs.width) * 3;
            double ni = (obs.rgb[nb] + obs.rgb[nb + 1] + obs.rgb[nb + 2]) / (3.0 * 255.0);
            gy_acc += std::abs(ni - inten);
          }
        }
      }
      const double np = double(p) * p;
      for (int c = 0; c < 3; ++c) {
        const double mean = sum[c] / np;
        stats[c] = mean;
        stats[3 + c] = std::sqrt(std::max(0.0, sq[c] / np - mean * mean));
      }
      stats[6] = wsum > 0.0 ? cx / wsum : 0.0;
      stats[7] = wsum > 0.0 ? cy / wsum : 0.0;
      stats[8] = gx_acc / (double(p) * (p - 1));
      stats[9] = gy_acc / (double(p) * (p - 1));

      const int ti = gy * gw + gx;
      const Tensor& pos = positional_[ti];
      for (int e = 0; e < cfg_.dim; ++e) {
        double acc = pos.data[e];
        for (int s = 0; s < kStatsDim; ++s) acc += projection_.at(e, s) * stats[s];
        fm.tokens.at(ti, e) = acc;
      }
    }
  }
  return fm;
}

// ------------------------------------------------------------- TextEncoder

TextEncoder::TextEncoder(const EncoderConfig& cfg) : cfg_(cfg) {
  Rng rng(hash_combine(cfg.seed, 0x3333));
  table_ = Tensor::randn({cfg.table_size, cfg.dim}, rng, 1.0 / std::sqrt(double(cfg.dim)));
  positional_ = make_positional(hash_combine(cfg.seed, 0x4444), 64, cfg.dim, 0.25);
}

TokenSequence TextEncoder::encode(const std::string& text) const {
  const auto words = tokenize(text);
  if (words.empty()) throw std::invalid_argument("text encoder: empty text");

  TokenSequence seq;
  seq.tokens = Tensor({static_cast<std::int64_t>(words.size()), cfg_.dim});
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::uint64_t row = fnv1a(words[i]) % static_cast<std::uint64_t>(cfg_.table_size);
    const Tensor& pos = positional_[i % positional_.size()];
    for (int e = 0; e < cfg_.dim; ++e) {
      seq.tokens.at(static_cast<std::int64_t>(i), e) =
          table_.at(static_cast<std::int64_t>(row), e) + pos.data[e];
    }
  }
  return seq;
}

}  // namespace pivot::enc
