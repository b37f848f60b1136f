// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "cfspm/numeric/tensor.hpp"

/// Differentiable primitives. Every function checks its shape rule, refuses
/// to return non-finite values, and records an adjoint on the active tape
/// when an input requires a gradient.
namespace cfspm::ops {

// Elementwise binary ops. `b` broadcasts into `a` numpy-style (right
// aligned, each axis equal or 1); the result has `a`'s shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double s);
Tensor add_scalar(const Tensor& x, double s);

/// [..., M, K] x [K, N] -> [..., M, N].
Tensor matmul(const Tensor& a, const Tensor& b);
/// Per-row-block matmul: [..., F, D] x [F, D, E] -> [..., F, E].
Tensor bin_matmul(const Tensor& a, const Tensor& w);

/// Swaps the last two axes.
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(std::span<const Tensor> xs, int axis);
Tensor slice(const Tensor& x, int axis, std::size_t begin, std::size_t end);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Per-channel cross-correlation with zero "same" padding.
/// x: [B, C, T], kernel: [C, K] with K odd -> [B, C, T].
Tensor conv1d_depthwise(const Tensor& x, const Tensor& kernel);
/// Average pooling along the last axis; T_out = (T - window) / stride + 1.
Tensor avgpool1d(const Tensor& x, std::size_t window, std::size_t stride);

/// Normalizes over the last axis (population variance).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
Tensor softmax(const Tensor& x);

Tensor sigmoid(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor elu(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
/// sign(v) * max(|v| - tau, 0).
Tensor soft_shrink(const Tensor& x, double tau);

/// Inverted dropout. Identity when `train` is false or `rate` is 0.
Tensor dropout(const Tensor& x, bool train, double rate, std::uint64_t seed);

/// Mean cross-entropy of [B, K] logits against [B, K] targets whose rows
/// are one-hot or all-zero (masked). The sum is divided by `divisor`, or by
/// B when divisor <= 0.
Tensor cross_entropy(const Tensor& logits, const Tensor& target, double divisor = 0.0);

/// Real and imaginary parts of the unnormalized real DFT along `axis`.
/// The axis of length L becomes floor(L/2)+1 bins.
Tensor rfft_re(const Tensor& x, int axis);
Tensor rfft_im(const Tensor& x, int axis);
/// Inverse of rfft (scaled by 1/L) along `axis`; the imaginary parts of
/// the DC and Nyquist bins do not contribute.
Tensor irfft(const Tensor& re, const Tensor& im, std::size_t length, int axis);

/// Zero-order-hold selective scan.
/// u, delta: [B, L, E]; b, c: [B, L, N]; a: [E, N] (strictly negative);
/// d_skip: [E]. Rank-2 inputs are treated as a batch of one.
Tensor selective_scan(const Tensor& u, const Tensor& delta, const Tensor& b,
                      const Tensor& c, const Tensor& a, const Tensor& d_skip);

using AttrValue = std::variant<double, std::int64_t, bool, Shape>;
using Attrs = std::map<std::string, AttrValue, std::less<>>;

/// Name-based dispatch over the primitive catalog. Unknown names throw.
Tensor apply_primitive(std::string_view kind, std::span<const Tensor> inputs,
                       const Attrs& attrs = {});

}  // namespace cfspm::ops
