// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cfspm/error.hpp"
#include "cfspm/numeric/optimizer.hpp"

namespace cfspm {
namespace {

void set_grad(Tensor& p, std::vector<double> g) {
  p.zero_grad();
  p.impl()->grad.assign(g.begin(), g.end());
}

TEST(Adam, ZeroGradientWithoutDecayLeavesParametersUnchanged) {
  Tensor p = Tensor::from({0.3, -1.2, 4.0});
  std::vector<Tensor> params{p};
  OptimizerState st({.learning_rate = 1e-3, .weight_decay = 0.0}, params);
  set_grad(params[0], {0, 0, 0});
  adam_step(params, st);
  EXPECT_EQ(p[0], 0.3);
  EXPECT_EQ(p[1], -1.2);
  EXPECT_EQ(p[2], 4.0);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepMovesByTheLearningRate) {
  Tensor p = Tensor::from({1.0});
  std::vector<Tensor> params{p};
  OptimizerState st({.learning_rate = 1e-3, .weight_decay = 0.0}, params);
  set_grad(params[0], {1.0});
  adam_step(params, st);
  // m_hat = 1, v_hat = 1: p = 1 - lr * 1 / (1 + eps).
  EXPECT_NEAR(p[0], 1.0 - 1e-3 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p[0], 0.999, 1e-9);
}

TEST(Adam, MatchesScalarReferenceOverManySteps) {
  const AdamConfig cfg{.learning_rate = 0.01, .weight_decay = 0.05};
  Tensor p = Tensor::from({0.5, -2.0});
  std::vector<Tensor> params{p};
  OptimizerState st(cfg, params);
  std::vector<double> ref{0.5, -2.0}, m(2, 0.0), v(2, 0.0);
  for (int t = 1; t <= 20; ++t) {
    // Gradient of sum(sin(p) + p^2 / 2) at the current point.
    std::vector<double> g(2);
    for (std::size_t k = 0; k < 2; ++k) g[k] = std::cos(p[k]) + p[k];
    set_grad(params[0], g);
    adam_step(params, st);
    for (std::size_t k = 0; k < 2; ++k) {
      const double gk = std::cos(ref[k]) + ref[k] + cfg.weight_decay * ref[k];
      m[k] = 0.9 * m[k] + 0.1 * gk;
      v[k] = 0.999 * v[k] + 0.001 * gk * gk;
      const double mh = m[k] / (1.0 - std::pow(0.9, t));
      const double vh = v[k] / (1.0 - std::pow(0.999, t));
      ref[k] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.eps);
    }
  }
  EXPECT_NEAR(p[0], ref[0], 1e-14);
  EXPECT_NEAR(p[1], ref[1], 1e-14);
  EXPECT_EQ(st.step, 20u);
}

TEST(Adam, DefaultsAreOneThousandth) {
  const AdamConfig cfg;
  EXPECT_EQ(cfg.learning_rate, 1e-3);
  EXPECT_EQ(cfg.weight_decay, 1e-3);
}

TEST(Adam, Errors) {
  Tensor p = Tensor::from({1.0, 2.0});
  std::vector<Tensor> params{p};
  OptimizerState st(AdamConfig{}, params);
  EXPECT_THROW(adam_step(params, st), ValidationError);
  set_grad(params[0], {1.0, NAN});
  EXPECT_THROW(adam_step(params, st), NumericError);
  std::vector<Tensor> two{p, Tensor::from({3.0})};
  EXPECT_THROW(adam_step(two, st), ShapeError);
  EXPECT_EQ(st.step, 0u);
}

}  // namespace
}  // namespace cfspm
