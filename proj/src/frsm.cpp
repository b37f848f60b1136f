// SPDX-License-Identifier: Apache-2.0
#include "cfspm/frsm.hpp"

#include <cmath>

#include "cfspm/error.hpp"
#include "cfspm/init.hpp"
#include "cfspm/numeric/ops.hpp"

namespace cfspm {

void validate(const FrsmConfig& cfg) {
  if (cfg.embed < 2) throw ValidationError("frsm: embedding size must be >= 2");
  if (cfg.tokens < 4) throw ValidationError("frsm: token length must be >= 4");
  if (cfg.expand < 1 || cfg.state < 1) throw ValidationError("frsm: expand and state must be >= 1");
  if (!(cfg.spectral_ratio > 0.0 && cfg.spectral_ratio < 1.0)) {
    throw ValidationError("frsm: spectral_ratio must lie in (0, 1)");
  }
  if (!(cfg.sparsity >= 0.0)) throw ValidationError("frsm: sparsity threshold must be >= 0");
  if (!(cfg.dropout >= 0.0 && cfg.dropout <= 1.0)) {
    throw ValidationError("frsm: dropout must lie in [0, 1]");
  }
  build_spectral_masks(cfg.bins(), cfg.spectral_ratio);
}

FrsmBlockParams init_block(const FrsmConfig& cfg, std::mt19937_64& rng) {
  validate(cfg);
  const std::size_t d = cfg.embed, e = cfg.inner(), n = cfg.state, r = cfg.rank(), f = cfg.bins();
  auto tn = [&](Shape s, std::size_t fan_in) {
    return param(truncated_normal(std::move(s), 1.0 / std::sqrt(double(fan_in)), rng));
  };
  auto zeros = [](Shape s) { return param(Tensor(std::move(s))); };
  auto ones = [](Shape s) { return param(Tensor(std::move(s), 1.0)); };

  FrsmBlockParams p;
  p.ln_gamma = ones({d});
  p.ln_beta = zeros({d});
  const Shape mix_shape = cfg.per_bin_mixer ? Shape{f, d, d} : Shape{d, d};
  // Real and imaginary parts share the complex fan-in, hence 2D.
  p.mix = {tn(mix_shape, 2 * d), tn(mix_shape, 2 * d)};
  p.mix_bias = {zeros({d}), zeros({d})};
  p.filter = {tn({f, d}, d), tn({f, d}, d)};
  p.fuse = tn({2 * d, d}, 2 * d);
  p.fuse_bias = zeros({d});
  p.ctx_gamma = ones({d});
  p.ctx_beta = zeros({d});
  p.w_scale = tn({d, e}, d);
  p.b_scale = zeros({e});
  p.w_bias = tn({d, e}, d);
  p.b_bias = zeros({e});
  p.w_in = tn({d, 2 * e}, d);
  p.w_dt_down = tn({e, r}, e);
  p.w_dt_up = tn({r, e}, r);
  // softplus(b) = 0.05 at initialization.
  p.b_dt = param(Tensor({e}, std::log(std::expm1(0.05))));
  p.w_b = tn({e, n}, e);
  p.w_c = tn({e, n}, e);
  Tensor a_log({e, n});
  for (std::size_t i = 0; i < e; ++i) {
    for (std::size_t j = 0; j < n; ++j) a_log.mutable_data()[i * n + j] = std::log(double(j + 1));
  }
  p.a_log = param(a_log);
  p.d_skip = ones({e});
  p.w_out = tn({e, d}, e);
  return p;
}

SpectralMaskSet build_spectral_masks(std::size_t bins, double ratio) {
  if (bins < 2) throw ValidationError("spectral masks need at least two bins");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("spectral ratio must lie in (0, 1)");
  const auto cut = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(bins)));
  if (cut == 0 || cut >= bins) {
    throw ValidationError("spectral ratio " + std::to_string(ratio) + " leaves a mask empty for " +
                          std::to_string(bins) + " bins");
  }
  SpectralMaskSet set;
  set.bins = bins;
  Tensor low({bins, 1}), high({bins, 1});
  for (std::size_t b = 0; b < bins; ++b) {
    (b < cut ? low : high).mutable_data()[b] = 1.0;
  }
  set.masks = {low, high};
  return set;
}

namespace {

void check_tokens(const Tensor& z, const FrsmConfig& cfg) {
  if (z.rank() != 3 || z.dim(1) != cfg.tokens || z.dim(2) != cfg.embed) {
    throw ShapeError("frsm: expected tokens [B, " + std::to_string(cfg.tokens) + ", " +
                     std::to_string(cfg.embed) + "], got " + shape_str(z.shape()));
  }
}

}  // namespace

Reorganized fourier_reorganize(const Tensor& z, const FrsmBlockParams& p, const FrsmConfig& cfg) {
  check_tokens(z, cfg);
  Tensor zt = ops::layer_norm(z, p.ln_gamma, p.ln_beta);
  ComplexTensor omega = ops::rfft(zt, 1);
  ComplexTensor mixed = cfg.per_bin_mixer ? ops::bin_matmul(omega, p.mix) : ops::matmul(omega, p.mix);
  mixed = ops::add(mixed, p.mix_bias);
  ComplexTensor hat = ops::add(ops::mul(ops::soft_shrink(mixed, cfg.sparsity), p.filter), omega);
  Tensor enh = ops::add(ops::irfft(hat, cfg.tokens, 1), zt);
  return {enh, hat, zt};
}

Context derive_context(const Reorganized& r, const SpectralMaskSet& masks,
                       const FrsmBlockParams& p, const FrsmConfig& cfg) {
  if (masks.bins != r.omega.re.dim(1)) {
    throw ShapeError("derive_context: mask set covers " + std::to_string(masks.bins) +
                     " bins, spectrum has " + std::to_string(r.omega.re.dim(1)));
  }
  std::vector<Tensor> bands;
  for (const Tensor& m : masks.masks) {
    bands.push_back(ops::add(ops::irfft(ops::mul(r.omega, m), cfg.tokens, 1), r.z_tilde));
  }
  Tensor fused = ops::add(ops::matmul(ops::concat(bands, 2), p.fuse), p.fuse_bias);
  Tensor ctx = ops::layer_norm(ops::add(fused, r.z_enh), p.ctx_gamma, p.ctx_beta);
  Tensor s = ops::sigmoid(ops::add(ops::matmul(ctx, p.w_scale), p.b_scale));
  Tensor bias = ops::add(ops::matmul(ctx, p.w_bias), p.b_bias);
  return {ctx, s, bias};
}

Tensor encode_block(const Tensor& z, const FrsmBlockParams& p, const SpectralMaskSet& masks,
                    const FrsmConfig& cfg, bool train, std::uint64_t seed) {
  check_tokens(z, cfg);
  const std::size_t e = cfg.inner();
  Tensor zt;
  Tensor u, res;
  Tensor ur;
  if (cfg.no_context) {
    zt = ops::layer_norm(z, p.ln_gamma, p.ln_beta);
    ur = ops::matmul(zt, p.w_in);
    u = ops::slice(ur, 2, 0, e);
    res = ops::slice(ur, 2, e, 2 * e);
  } else {
    const Reorganized r = fourier_reorganize(z, p, cfg);
    const Context c = derive_context(r, masks, p, cfg);
    ur = ops::matmul(r.z_tilde, p.w_in);
    Tensor u0 = ops::slice(ur, 2, 0, e);
    u = ops::add(u0, ops::mul(u0, c.scale));
    res = ops::add(ops::slice(ur, 2, e, 2 * e), c.bias);
  }
  Tensor delta = ops::softplus(
      ops::add(ops::matmul(ops::matmul(u, p.w_dt_down), p.w_dt_up), p.b_dt));
  Tensor bt = ops::matmul(u, p.w_b);
  Tensor ct = ops::matmul(u, p.w_c);
  Tensor a = ops::scale(ops::exp(p.a_log), -1.0);
  Tensor o = ops::selective_scan(u, delta, bt, ct, a, p.d_skip);
  Tensor zs = ops::matmul(ops::mul(o, ops::silu(res)), p.w_out);
  return ops::add(z, ops::dropout(zs, train, cfg.dropout, seed));
}

}  // namespace cfspm
