// SPDX-License-Identifier: Apache-2.0
#include "cfspm/model.hpp"

#include <cmath>
#include <random>

#include "cfspm/error.hpp"
#include "cfspm/init.hpp"
#include "cfspm/numeric/ops.hpp"

namespace cfspm {

ModelConfig& ModelConfig::finalize() {
  frsm.embed = tokenizer.embed;
  frsm.tokens = tokenizer.tokens();
  return *this;
}

void validate(const ModelConfig& cfg) {
  validate(cfg.tokenizer);
  if (cfg.frsm.embed != cfg.tokenizer.embed || cfg.frsm.tokens != cfg.tokenizer.tokens()) {
    throw ValidationError("model: encoder dimensions disagree with the tokenizer");
  }
  validate(cfg.frsm);
  if (cfg.depth < 1) throw ValidationError("model: depth must be >= 1");
  if (cfg.classes < 2) throw ValidationError("model: need at least two classes");
}

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.tokenizer = init_tokenizer(cfg.tokenizer, rng);
  for (std::size_t b = 0; b < cfg.depth; ++b) p.blocks.push_back(init_block(cfg.frsm, rng));
  const std::size_t d = cfg.frsm.embed, l = cfg.frsm.tokens;
  p.head_gamma = param(Tensor({d}, 1.0));
  p.head_beta = param(Tensor({d}));
  p.cls_w = param(truncated_normal({l * d, cfg.classes}, 1.0 / std::sqrt(double(l * d)), rng));
  p.cls_b = param(Tensor({cfg.classes}));
  return p;
}

NamedTensors named_parameters(const ModelParams& p) {
  NamedTensors out;
  const auto& t = p.tokenizer;
  for (std::size_t m = 0; m < t.temporal.size(); ++m) {
    out.emplace_back("tokenizer.temporal." + std::to_string(m), t.temporal[m]);
  }
  out.emplace_back("tokenizer.spatial", t.spatial);
  out.emplace_back("tokenizer.spatial_bias", t.spatial_bias);
  out.emplace_back("tokenizer.proj", t.proj);
  out.emplace_back("tokenizer.proj_bias", t.proj_bias);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto& k = p.blocks[b];
    const std::string pre = "blocks." + std::to_string(b) + ".";
    out.emplace_back(pre + "ln.gamma", k.ln_gamma);
    out.emplace_back(pre + "ln.beta", k.ln_beta);
    out.emplace_back(pre + "mix.re", k.mix.re);
    out.emplace_back(pre + "mix.im", k.mix.im);
    out.emplace_back(pre + "mix_bias.re", k.mix_bias.re);
    out.emplace_back(pre + "mix_bias.im", k.mix_bias.im);
    out.emplace_back(pre + "filter.re", k.filter.re);
    out.emplace_back(pre + "filter.im", k.filter.im);
    out.emplace_back(pre + "fuse.w", k.fuse);
    out.emplace_back(pre + "fuse.b", k.fuse_bias);
    out.emplace_back(pre + "ctx_ln.gamma", k.ctx_gamma);
    out.emplace_back(pre + "ctx_ln.beta", k.ctx_beta);
    out.emplace_back(pre + "scale.w", k.w_scale);
    out.emplace_back(pre + "scale.b", k.b_scale);
    out.emplace_back(pre + "bias.w", k.w_bias);
    out.emplace_back(pre + "bias.b", k.b_bias);
    out.emplace_back(pre + "in.w", k.w_in);
    out.emplace_back(pre + "dt.down", k.w_dt_down);
    out.emplace_back(pre + "dt.up", k.w_dt_up);
    out.emplace_back(pre + "dt.b", k.b_dt);
    out.emplace_back(pre + "ssm.b", k.w_b);
    out.emplace_back(pre + "ssm.c", k.w_c);
    out.emplace_back(pre + "ssm.a_log", k.a_log);
    out.emplace_back(pre + "ssm.d", k.d_skip);
    out.emplace_back(pre + "out.w", k.w_out);
  }
  out.emplace_back("head.ln.gamma", p.head_gamma);
  out.emplace_back("head.ln.beta", p.head_beta);
  out.emplace_back("head.cls.w", p.cls_w);
  out.emplace_back("head.cls.b", p.cls_b);
  return out;
}

std::vector<Tensor> parameter_list(const ModelParams& p) {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters(p)) out.push_back(t);
  return out;
}

ModelParams clone_params(const ModelParams& p) {
  ModelParams c = p;
  auto leaf = [](Tensor& t) { t = param(t.clone()); };
  auto& t = c.tokenizer;
  for (auto& k : t.temporal) leaf(k);
  for (Tensor* x : {&t.spatial, &t.spatial_bias, &t.proj, &t.proj_bias}) leaf(*x);
  for (auto& k : c.blocks) {
    for (Tensor* x : {&k.ln_gamma, &k.ln_beta, &k.mix.re, &k.mix.im, &k.mix_bias.re,
                      &k.mix_bias.im, &k.filter.re, &k.filter.im, &k.fuse, &k.fuse_bias,
                      &k.ctx_gamma, &k.ctx_beta, &k.w_scale, &k.b_scale, &k.w_bias, &k.b_bias,
                      &k.w_in, &k.w_dt_down, &k.w_dt_up, &k.b_dt, &k.w_b, &k.w_c, &k.a_log,
                      &k.d_skip, &k.w_out}) {
      leaf(*x);
    }
  }
  for (Tensor* x : {&c.head_gamma, &c.head_beta, &c.cls_w, &c.cls_b}) leaf(*x);
  return c;
}

Tensor model_logits(const Tensor& x, const ModelParams& p, const ModelConfig& cfg, bool train,
                    std::uint64_t seed) {
  if (p.blocks.size() != cfg.depth) throw ShapeError("model: block count differs from depth");
  const SpectralMaskSet masks = build_spectral_masks(cfg.frsm.bins(), cfg.frsm.spectral_ratio);
  Tensor z = tokenize(x, cfg.tokenizer, p.tokenizer);
  if (z.rank() == 2) z = ops::reshape(z, {1, z.dim(0), z.dim(1)});
  for (std::size_t b = 0; b < cfg.depth; ++b) {
    z = encode_block(z, p.blocks[b], masks, cfg.frsm, train, seed * 0x9E3779B97F4A7C15ULL + b + 1);
  }
  z = ops::layer_norm(z, p.head_gamma, p.head_beta);
  const std::size_t batch = z.dim(0);
  z = ops::reshape(z, {batch, z.dim(1) * z.dim(2)});
  return ops::add(ops::matmul(z, p.cls_w), p.cls_b);
}

Tensor model_forward(const Tensor& x, const ModelParams& p, const ModelConfig& cfg, bool train,
                     std::uint64_t seed) {
  return ops::softmax(model_logits(x, p, cfg, train, seed));
}

}  // namespace cfspm
