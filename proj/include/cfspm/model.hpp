// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cfspm/frsm.hpp"
#include "cfspm/tokenizer.hpp"

namespace cfspm {

/// Tokenizer, encoder stack and classification head. `frsm.embed` and
/// `frsm.tokens` are kept in sync with the tokenizer by `finalize`.
struct ModelConfig {
  TokenizerConfig tokenizer;
  FrsmConfig frsm;
  std::size_t depth = 2;
  std::size_t classes = 2;

  /// Copies the tokenizer's D and derived L into the encoder config.
  ModelConfig& finalize();
};

void validate(const ModelConfig& cfg);

struct ModelParams {
  TokenizerParams tokenizer;
  std::vector<FrsmBlockParams> blocks;
  Tensor head_gamma, head_beta;  // [D]
  Tensor cls_w;                  // [L*D, K]
  Tensor cls_b;                  // [K]
};

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed);

/// Handles to every learnable tensor under a stable dotted name, in a fixed
/// order (tokenizer, blocks, head).
NamedTensors named_parameters(const ModelParams& p);
std::vector<Tensor> parameter_list(const ModelParams& p);

/// Independent copy of every parameter.
ModelParams clone_params(const ModelParams& p);

/// [B, C, T] -> [B, K] logits.
Tensor model_logits(const Tensor& x, const ModelParams& p, const ModelConfig& cfg, bool train,
                    std::uint64_t seed = 0);
/// Softmax of model_logits.
Tensor model_forward(const Tensor& x, const ModelParams& p, const ModelConfig& cfg, bool train,
                     std::uint64_t seed = 0);

}  // namespace cfspm
