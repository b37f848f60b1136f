// SPDX-License-Identifier: Apache-2.0
#include "cfspm/gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "cfspm/numeric/ops.hpp"
#include "cfspm/numeric/tape.hpp"

namespace cfspm {

ModelConfig gradcheck_config() {
  ModelConfig c;
  c.tokenizer.channels = 4;
  c.tokenizer.samples = 120;
  c.tokenizer.embed = 8;
  c.depth = 1;
  c.frsm.state = 4;
  c.classes = 2;
  c.finalize();
  return c;
}

GradcheckReport run_gradcheck(const ModelConfig& cfg, std::uint64_t seed, double step) {
  const auto start = std::chrono::steady_clock::now();
  ModelParams params = init_model(cfg, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor x({2, cfg.tokenizer.channels, cfg.tokenizer.samples});
  for (double& v : x.mutable_data()) v = gauss(rng);
  Tensor y({2, cfg.classes});
  y.mutable_data()[0] = 1.0;
  y.mutable_data()[cfg.classes + 1] = 1.0;
  const std::uint64_t dropout_seed = seed + 7;

  auto loss_value = [&] {
    return ops::cross_entropy(model_logits(x, params, cfg, true, dropout_seed), y).item();
  };

  auto named = named_parameters(params);
  for (auto& [name, t] : named) t.zero_grad();
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = ops::cross_entropy(model_logits(x, params, cfg, true, dropout_seed), y);
    tape.backward(loss);
  }

  GradcheckReport report;
  for (auto& [name, t] : named) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto data = t.mutable_data();
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double keep = data[i];
      data[i] = keep + step;
      const double up = loss_value();
      data[i] = keep - step;
      const double down = loss_value();
      data[i] = keep;
      const double fd = (up - down) / (2.0 * step);
      diff2 += (analytic[i] - fd) * (analytic[i] - fd);
      a2 += analytic[i] * analytic[i];
      n2 += fd * fd;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-8});
    ParamGradError e{name, data.size(), std::sqrt(diff2) / denom};
    report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    report.params.push_back(std::move(e));
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace cfspm
