// SPDX-License-Identifier: Apache-2.0
#include "cfspm/numeric/optimizer.hpp"

#include <cmath>

#include "cfspm/error.hpp"

namespace cfspm {

OptimizerState::OptimizerState(AdamConfig cfg, std::span<const Tensor> params)
    : config(cfg) {
  for (const Tensor& p : params) {
    first_moment.emplace_back(p.numel(), 0.0);
    second_moment.emplace_back(p.numel(), 0.0);
  }
}

void adam_step(std::span<Tensor> params, OptimizerState& state) {
  if (params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: optimizer state tracks " +
                     std::to_string(state.first_moment.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw ValidationError("adam_step: parameter " + std::to_string(i) + " has no gradient");
    }
    if (state.first_moment[i].size() != params[i].numel()) {
      throw ShapeError("adam_step: moment shape mismatch for parameter " + std::to_string(i));
    }
    if (!all_finite(params[i].grad())) {
      throw NumericError("adam_step: non-finite gradient for parameter " + std::to_string(i));
    }
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].mutable_data();
    auto g = params[i].grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k] + c.weight_decay * p[k];
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace cfspm
