// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cfspm/error.hpp"
#include "cfspm/tokenizer.hpp"
#include "oracles.hpp"

namespace cfspm {
namespace {

TokenizerConfig small_config() {
  TokenizerConfig c;
  c.channels = 4;
  c.samples = 120;
  c.kernels = {7, 3};
  c.filters = 2;
  c.embed = 6;
  return c;
}

TokenizerParams random_params(const TokenizerConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TokenizerParams p = init_tokenizer(cfg, rng);
  p.spatial_bias = oracle::uniform(p.spatial_bias.shape(), rng);
  p.proj_bias = oracle::uniform(p.proj_bias.shape(), rng);
  return p;
}

// The pipeline in its literal order: filter every channel with every
// branch filter, combine channels per map, ELU, pool, project, scale, PE.
std::vector<double> literal_tokens(const Tensor& x, const TokenizerConfig& cfg,
                                   const TokenizerParams& p) {
  const std::size_t C = cfg.channels, T = cfg.samples, F = cfg.filters, D = cfg.embed;
  const std::size_t maps = cfg.maps(), L = cfg.tokens();
  std::vector<std::vector<double>> feat(maps, std::vector<double>(T, 0.0));
  for (std::size_t m = 0; m < cfg.kernels.size(); ++m) {
    const std::size_t K = cfg.kernels[m];
    const auto pad = static_cast<std::ptrdiff_t>(K / 2);
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t map = m * F + f;
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t t = 0; t < T; ++t) {
          double conv = 0.0;
          for (std::size_t j = 0; j < K; ++j) {
            const auto src = static_cast<std::ptrdiff_t>(t + j) - pad;
            if (src >= 0 && src < static_cast<std::ptrdiff_t>(T)) {
              conv += p.temporal[m].at({f, j}) * x.at({c, static_cast<std::size_t>(src)});
            }
          }
          feat[map][t] += p.spatial.at({map, c}) * conv;
        }
      }
      for (std::size_t t = 0; t < T; ++t) {
        const double v = feat[map][t] + p.spatial_bias[map];
        feat[map][t] = v > 0 ? v : std::expm1(v);
      }
    }
  }
  const Tensor pe = positional_encoding(L, D);
  std::vector<double> out(L * D);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t d = 0; d < D; ++d) {
      double acc = p.proj_bias[d];
      for (std::size_t map = 0; map < maps; ++map) {
        double pooled = 0.0;
        for (std::size_t w = 0; w < cfg.pool_window; ++w) pooled += feat[map][l * cfg.pool_stride + w];
        acc += pooled / static_cast<double>(cfg.pool_window) * p.proj.at({map, d});
      }
      out[l * D + d] = std::sqrt(static_cast<double>(D)) * acc + pe.at({l, d});
    }
  }
  return out;
}

TEST(Tokenizer, XwDefaultsGiveSixtySixTokens) {
  const TokenizerConfig cfg;
  EXPECT_EQ(cfg.tokens(), 66u);
  EXPECT_EQ(cfg.maps(), 16u);
  std::mt19937_64 rng(1);
  const TokenizerParams p = init_tokenizer(cfg, rng);
  const Tensor z = tokenize(oracle::uniform({30, 1000}, rng), cfg, p);
  EXPECT_EQ(z.shape(), (Shape{66, 30}));
  const Tensor zb = tokenize(oracle::uniform({3, 30, 1000}, rng), cfg, p);
  EXPECT_EQ(zb.shape(), (Shape{3, 66, 30}));
}

TEST(Tokenizer, TokenCountDependsOnlyOnSamplesAndPooling) {
  TokenizerConfig cfg = small_config();
  EXPECT_EQ(cfg.tokens(), 7u);
  cfg.samples = 1708;
  EXPECT_EQ(cfg.tokens(), 113u);
  cfg.channels = 63;
  EXPECT_EQ(cfg.tokens(), 113u);
}

TEST(Tokenizer, MatchesLiteralPipelineOrder) {
  const TokenizerConfig cfg = small_config();
  const TokenizerParams p = random_params(cfg, 2);
  std::mt19937_64 rng(3);
  const Tensor x = oracle::uniform({4, 120}, rng, -3, 3);
  EXPECT_LT(oracle::max_abs_diff(tokenize(x, cfg, p).data(), literal_tokens(x, cfg, p)), 1e-10);
}

TEST(Tokenizer, ZeroTrialWithZeroBiasesIsThePositionalEncoding) {
  const TokenizerConfig cfg = small_config();
  std::mt19937_64 rng(4);
  const TokenizerParams p = init_tokenizer(cfg, rng);
  const Tensor z = tokenize(Tensor({4, 120}), cfg, p);
  EXPECT_EQ(oracle::max_abs_diff(z.data(), positional_encoding(7, 6).data()), 0.0);
}

TEST(Tokenizer, ChannelPermutationWithPermutedWeightsIsInvariant) {
  const TokenizerConfig cfg = small_config();
  const TokenizerParams p = random_params(cfg, 5);
  std::mt19937_64 rng(6);
  const Tensor x = oracle::uniform({4, 120}, rng);
  const std::vector<std::size_t> perm{3, 1, 0, 2};
  Tensor xp({4, 120});
  TokenizerParams pp = p;
  pp.spatial = Tensor(p.spatial.shape());
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t t = 0; t < 120; ++t) xp.mutable_data()[c * 120 + t] = x.at({perm[c], t});
    for (std::size_t m = 0; m < cfg.maps(); ++m) {
      pp.spatial.mutable_data()[m * 4 + c] = p.spatial.at({m, perm[c]});
    }
  }
  EXPECT_LT(oracle::max_abs_diff(tokenize(x, cfg, p).data(), tokenize(xp, cfg, pp).data()),
            1e-10);
}

TEST(Tokenizer, LinearWithIdentityActivation) {
  TokenizerConfig cfg = small_config();
  cfg.activation = Activation::kIdentity;
  std::mt19937_64 rng(7);
  const TokenizerParams p = init_tokenizer(cfg, rng);
  const Tensor x = oracle::uniform({4, 120}, rng);
  const Tensor pe = positional_encoding(7, 6);
  const Tensor z1 = tokenize(x, cfg, p);
  const Tensor z2 = tokenize(ops::scale(x, 2.0), cfg, p);
  for (std::size_t i = 0; i < z1.numel(); ++i) {
    EXPECT_NEAR(z2[i] - pe[i], 2.0 * (z1[i] - pe[i]), 1e-10);
  }
}

TEST(Tokenizer, ParameterGradientsMatchFiniteDifferences) {
  const TokenizerConfig cfg = small_config();
  const TokenizerParams p = random_params(cfg, 8);
  std::mt19937_64 rng(9);
  const Tensor x = oracle::uniform({2, 4, 120}, rng);
  const oracle::ScalarFn f = [&](const std::vector<Tensor>& v) {
    TokenizerParams q;
    q.temporal = {v[0], v[1]};
    q.spatial = v[2];
    q.spatial_bias = v[3];
    q.proj = v[4];
    q.proj_bias = v[5];
    return oracle::probe(tokenize(x, cfg, q));
  };
  const std::vector<Tensor> leaves{p.temporal[0].clone(), p.temporal[1].clone(), p.spatial.clone(),
                                   p.spatial_bias.clone(), p.proj.clone(), p.proj_bias.clone()};
  EXPECT_LT(oracle::gradient_error(f, leaves, 1e-5), 1e-4);
}

TEST(Tokenizer, InitializationScales) {
  const TokenizerConfig cfg;
  std::mt19937_64 rng(10);
  const TokenizerParams p = init_tokenizer(cfg, rng);
  for (double v : p.spatial_bias.data()) EXPECT_EQ(v, 0.0);
  for (double v : p.proj_bias.data()) EXPECT_EQ(v, 0.0);
  const double bound = 2.0 / std::sqrt(30.0);
  double ss = 0.0;
  for (double v : p.spatial.data()) {
    EXPECT_LE(std::abs(v), bound);
    ss += v * v;
  }
  // A +-2 sigma truncated normal keeps about 77% of the variance.
  EXPECT_NEAR(std::sqrt(ss / p.spatial.numel()), 0.88 / std::sqrt(30.0), 0.02);
  EXPECT_TRUE(p.proj.requires_grad());
}

TEST(Tokenizer, Errors) {
  TokenizerConfig cfg = small_config();
  const TokenizerParams p = random_params(cfg, 11);
  EXPECT_THROW(tokenize(Tensor({5, 120}), cfg, p), ShapeError);
  EXPECT_THROW(tokenize(Tensor({4, 100}), cfg, p), ShapeError);
  TokenizerConfig bad = cfg;
  bad.samples = 20;
  EXPECT_THROW(validate(bad), ValidationError);
  bad = cfg;
  bad.kernels = {8};
  EXPECT_THROW(validate(bad), ValidationError);
  bad = cfg;
  bad.filters = 0;
  EXPECT_THROW(validate(bad), ValidationError);
}

TEST(PositionalEncoding, Values) {
  const Tensor pe = positional_encoding(66, 30);
  ASSERT_EQ(pe.shape(), (Shape{66, 30}));
  for (std::size_t d = 0; d < 30; ++d) EXPECT_EQ(pe.at({0, d}), d % 2 == 0 ? 0.0 : 1.0);
  for (double v : pe.data()) EXPECT_LE(std::abs(v), 1.0);
  for (std::size_t t = 0; t < 66; ++t) {
    EXPECT_DOUBLE_EQ(pe.at({t, 0}), std::sin(static_cast<double>(t)));
    const double w = std::pow(10000.0, 4.0 / 30.0);
    EXPECT_NEAR(pe.at({t, 4}), std::sin(t / w), 1e-15);
    EXPECT_NEAR(pe.at({t, 5}), std::cos(t / w), 1e-15);
  }
}

}  // namespace
}  // namespace cfspm
