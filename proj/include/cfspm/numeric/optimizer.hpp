// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cfspm/numeric/tensor.hpp"

namespace cfspm {

struct AdamConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  OptimizerState() = default;
  OptimizerState(AdamConfig cfg, std::span<const Tensor> params);
};

/// One bias-corrected Adam update using each parameter's gradient buffer.
/// Weight decay enters as an additive `weight_decay * p` gradient term.
void adam_step(std::span<Tensor> params, OptimizerState& state);

}  // namespace cfspm
