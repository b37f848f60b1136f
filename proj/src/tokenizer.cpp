// SPDX-License-Identifier: Apache-2.0
#include "cfspm/tokenizer.hpp"

#include <cmath>

#include "cfspm/error.hpp"
#include "cfspm/init.hpp"
#include "cfspm/numeric/ops.hpp"

namespace cfspm {

std::size_t TokenizerConfig::tokens() const {
  if (samples < pool_window || pool_stride == 0) return 0;
  return (samples - pool_window) / pool_stride + 1;
}

void validate(const TokenizerConfig& cfg) {
  if (cfg.channels < 1) throw ValidationError("tokenizer: channels must be >= 1");
  if (cfg.kernels.empty()) throw ValidationError("tokenizer: at least one branch is required");
  for (std::size_t k : cfg.kernels) {
    if (k % 2 == 0) throw ValidationError("tokenizer: kernel lengths must be odd");
  }
  if (cfg.filters < 1) throw ValidationError("tokenizer: filters must be >= 1");
  if (cfg.pool_window < 1 || cfg.pool_stride < 1) {
    throw ValidationError("tokenizer: pooling window and stride must be >= 1");
  }
  if (cfg.samples < cfg.pool_window) {
    throw ValidationError("tokenizer: trial is shorter than the pooling window");
  }
  if (cfg.tokens() < 4) throw ValidationError("tokenizer: token length must be >= 4");
  if (cfg.embed < 2) throw ValidationError("tokenizer: embedding size must be >= 2");
}

TokenizerParams init_tokenizer(const TokenizerConfig& cfg, std::mt19937_64& rng) {
  validate(cfg);
  TokenizerParams p;
  for (std::size_t k : cfg.kernels) {
    p.temporal.push_back(param(truncated_normal({cfg.filters, k}, 1.0 / std::sqrt(double(k)), rng)));
  }
  const std::size_t maps = cfg.maps();
  p.spatial = param(truncated_normal({maps, cfg.channels}, 1.0 / std::sqrt(double(cfg.channels)), rng));
  p.spatial_bias = param(Tensor({maps, 1}));
  p.proj = param(truncated_normal({maps, cfg.embed}, 1.0 / std::sqrt(double(maps)), rng));
  p.proj_bias = param(Tensor({cfg.embed}));
  return p;
}

Tensor positional_encoding(std::size_t length, std::size_t dim) {
  Tensor pe({length, dim});
  auto d = pe.mutable_data();
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double i2 = static_cast<double>(j - j % 2);
      const double angle = static_cast<double>(t) / std::pow(10000.0, i2 / static_cast<double>(dim));
      d[t * dim + j] = j % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Tensor tokenize(const Tensor& x, const TokenizerConfig& cfg, const TokenizerParams& p) {
  const bool single = x.rank() == 2;
  const Tensor xb = single ? ops::reshape(x, {1, x.dim(0), x.dim(1)}) : x;
  if (xb.rank() != 3 || xb.dim(1) != cfg.channels || xb.dim(2) != cfg.samples) {
    throw ShapeError("tokenize: expected trials of shape [" + std::to_string(cfg.channels) + ", " +
                     std::to_string(cfg.samples) + "], got " + shape_str(x.shape()));
  }
  if (p.temporal.size() != cfg.kernels.size() || p.spatial.shape() != Shape{cfg.maps(), cfg.channels} ||
      p.proj.shape() != Shape{cfg.maps(), cfg.embed}) {
    throw ShapeError("tokenize: parameters do not match the tokenizer config");
  }
  const std::size_t f = cfg.filters;

  // [B, C, T] -> [B, maps, T] spatial combination.
  Tensor mixed = ops::transpose(ops::matmul(ops::transpose(xb), ops::transpose(p.spatial)));
  std::vector<Tensor> branches;
  for (std::size_t m = 0; m < cfg.kernels.size(); ++m) {
    Tensor maps = ops::slice(mixed, 1, m * f, (m + 1) * f);
    branches.push_back(ops::conv1d_depthwise(maps, p.temporal[m]));
  }
  Tensor feat = branches.size() == 1 ? branches[0] : ops::concat(branches, 1);
  feat = ops::add(feat, p.spatial_bias);
  if (cfg.activation == Activation::kElu) feat = ops::elu(feat);
  Tensor pooled = ops::avgpool1d(feat, cfg.pool_window, cfg.pool_stride);  // [B, maps, L]
  Tensor tokens = ops::add(ops::matmul(ops::transpose(pooled), p.proj), p.proj_bias);
  tokens = ops::scale(tokens, std::sqrt(static_cast<double>(cfg.embed)));
  tokens = ops::add(tokens, positional_encoding(cfg.tokens(), cfg.embed));
  return single ? ops::reshape(tokens, {cfg.tokens(), cfg.embed}) : tokens;
}

}  // namespace cfspm
