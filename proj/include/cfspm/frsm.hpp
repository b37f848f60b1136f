// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cfspm/numeric/complex.hpp"
#include "cfspm/numeric/tensor.hpp"

namespace cfspm {

/// Encoder block hyperparameters. Token trajectories are stored token-major,
/// [B, L, D]; the spectrum is taken along the token axis and has
/// N_f = floor(L/2)+1 bins, stored [B, N_f, D].
struct FrsmConfig {
  std::size_t embed = 30;   // D
  std::size_t tokens = 66;  // L
  std::size_t expand = 2;
  std::size_t state = 16;   // N_state
  std::size_t dt_rank = 0;  // 0 selects ceil(D / 16)
  double spectral_ratio = 0.45;
  double sparsity = 0.01;   // soft-shrink threshold
  double dropout = 0.1;
  /// One complex D x D mixer per frequency bin instead of a shared one.
  bool per_bin_mixer = false;
  /// Drops the spectral context: S = 0 and Bias = 0.
  bool no_context = false;

  std::size_t inner() const { return expand * embed; }
  std::size_t bins() const { return tokens / 2 + 1; }
  std::size_t rank() const { return dt_rank ? dt_rank : (embed + 15) / 16; }
};

void validate(const FrsmConfig& cfg);

struct FrsmBlockParams {
  Tensor ln_gamma, ln_beta;        // [D]
  ComplexTensor mix;               // [D, D] or [N_f, D, D] when per-bin
  ComplexTensor mix_bias;          // [D]
  ComplexTensor filter;            // [N_f, D]
  Tensor fuse, fuse_bias;          // H: [2D, D], [D]
  Tensor ctx_gamma, ctx_beta;      // [D]
  Tensor w_scale, b_scale;         // [D, E], [E]
  Tensor w_bias, b_bias;           // [D, E], [E]
  Tensor w_in;                     // [D, 2E]
  Tensor w_dt_down, w_dt_up, b_dt; // [E, R], [R, E], [E]
  Tensor w_b, w_c;                 // [E, N]
  Tensor a_log;                    // [E, N]
  Tensor d_skip;                   // [E]
  Tensor w_out;                    // [E, D]
};

FrsmBlockParams init_block(const FrsmConfig& cfg, std::mt19937_64& rng);

/// Complementary band masks over `bins` frequency bins, each [bins, 1].
/// The low mask covers [0, ceil(ratio * bins)).
struct SpectralMaskSet {
  std::vector<Tensor> masks;
  std::size_t bins = 0;
};
SpectralMaskSet build_spectral_masks(std::size_t bins, double ratio);

struct Reorganized {
  Tensor z_enh;         // [B, L, D]
  ComplexTensor omega;  // reorganized spectrum, [B, N_f, D]
  Tensor z_tilde;       // LN(Z), [B, L, D]
};

/// Z~ = LN(Z), Omega = rfft(Z~), Omega^ = shrink(M_f(Omega)) * W_f + Omega,
/// Z_enh = irfft(Omega^) + Z~.
Reorganized fourier_reorganize(const Tensor& z, const FrsmBlockParams& p, const FrsmConfig& cfg);

struct Context {
  Tensor ctx;    // [B, L, D]
  Tensor scale;  // S, [B, L, E]
  Tensor bias;   // [B, L, E]
};

Context derive_context(const Reorganized& r, const SpectralMaskSet& masks,
                       const FrsmBlockParams& p, const FrsmConfig& cfg);

/// One encoder block: Z + Drop(Z*). `seed` drives the dropout mask.
Tensor encode_block(const Tensor& z, const FrsmBlockParams& p, const SpectralMaskSet& masks,
                    const FrsmConfig& cfg, bool train, std::uint64_t seed);

}  // namespace cfspm
