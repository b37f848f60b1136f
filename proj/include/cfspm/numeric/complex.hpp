// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cfspm/numeric/tensor.hpp"

namespace cfspm {

/// Complex array stored as two real tensors of identical shape. Every
/// operation below is a composition of real primitives, so adjoints come
/// from the tape.
struct ComplexTensor {
  Tensor re;
  Tensor im;

  ComplexTensor() = default;
  ComplexTensor(Tensor r, Tensor i);

  const Shape& shape() const { return re.shape(); }
};

namespace ops {

/// Real FFT of a real tensor along `axis` (unnormalized).
ComplexTensor rfft(const Tensor& x, int axis);
/// Inverse real FFT along `axis`, scaled by 1/length.
Tensor irfft(const ComplexTensor& s, std::size_t length, int axis);

/// rFFT of a [D, L] token trajectory along the token axis -> [D, L/2+1].
ComplexTensor rfft_tokens(const Tensor& x);
/// Inverse of rfft_tokens.
Tensor irfft_tokens(const ComplexTensor& s, std::size_t length);

ComplexTensor add(const ComplexTensor& a, const ComplexTensor& b);
/// Elementwise product; `b` broadcasts into `a`.
ComplexTensor mul(const ComplexTensor& a, const ComplexTensor& b);
/// Multiplies by a real tensor (e.g. a 0/1 mask); `m` broadcasts into `a`.
ComplexTensor mul(const ComplexTensor& a, const Tensor& m);
/// [..., M, K] x [K, N] complex matrix product.
ComplexTensor matmul(const ComplexTensor& a, const ComplexTensor& w);
/// [..., F, D] x [F, D, E]: an independent complex map per row block.
ComplexTensor bin_matmul(const ComplexTensor& a, const ComplexTensor& w);
/// Componentwise shrinkage of real and imaginary parts.
ComplexTensor soft_shrink(const ComplexTensor& s, double tau);

}  // namespace ops
}  // namespace cfspm
