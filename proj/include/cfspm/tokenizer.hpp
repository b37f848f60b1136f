// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

#include "cfspm/numeric/tensor.hpp"

namespace cfspm {

enum class Activation { kElu, kIdentity };

struct TokenizerConfig {
  std::size_t channels = 30;
  std::size_t samples = 1000;
  /// One temporal branch per kernel length; the long kernel is the
  /// low-frequency branch, the short one the high-frequency branch.
  std::vector<std::size_t> kernels{63, 15};
  std::size_t filters = 8;  // per branch
  std::size_t pool_window = 25;
  std::size_t pool_stride = 15;
  std::size_t embed = 30;
  Activation activation = Activation::kElu;

  std::size_t maps() const { return kernels.size() * filters; }
  /// floor((T - window) / stride) + 1.
  std::size_t tokens() const;
};

void validate(const TokenizerConfig& cfg);

struct TokenizerParams {
  std::vector<Tensor> temporal;  // per branch [filters, k_m]
  Tensor spatial;                // [maps, channels]
  Tensor spatial_bias;           // [maps, 1]
  Tensor proj;                   // [maps, embed]
  Tensor proj_bias;              // [embed]
};

TokenizerParams init_tokenizer(const TokenizerConfig& cfg, std::mt19937_64& rng);

/// PE[t, 2i] = sin(t / 10000^(2i/D)), PE[t, 2i+1] = cos(t / 10000^(2i/D)).
Tensor positional_encoding(std::size_t length, std::size_t dim);

/// [B, C, T] (or [C, T]) -> [B, L, D] (or [L, D]).
///
/// Each temporal filter is shared across channels and the spatial map is
/// linear, so the spatial combination runs first and each map is then
/// filtered once; this equals filtering every channel and then combining.
Tensor tokenize(const Tensor& x, const TokenizerConfig& cfg, const TokenizerParams& p);

}  // namespace cfspm
