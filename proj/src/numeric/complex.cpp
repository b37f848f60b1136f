// SPDX-License-Identifier: Apache-2.0
#include "cfspm/numeric/complex.hpp"

#include "cfspm/error.hpp"
#include "cfspm/numeric/ops.hpp"

namespace cfspm {

ComplexTensor::ComplexTensor(Tensor r, Tensor i) : re(std::move(r)), im(std::move(i)) {
  if (re.shape() != im.shape()) {
    throw ShapeError("complex tensor parts differ: " + shape_str(re.shape()) + " vs " +
                     shape_str(im.shape()));
  }
}

namespace ops {

ComplexTensor rfft(const Tensor& x, int axis) { return {rfft_re(x, axis), rfft_im(x, axis)}; }

Tensor irfft(const ComplexTensor& s, std::size_t length, int axis) {
  return irfft(s.re, s.im, length, axis);
}

ComplexTensor rfft_tokens(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("rfft_tokens expects a [D, L] trajectory");
  if (x.dim(-1) < 2) throw ShapeError("rfft_tokens needs at least two tokens");
  return rfft(x, -1);
}

Tensor irfft_tokens(const ComplexTensor& s, std::size_t length) {
  return irfft(s, length, -1);
}

ComplexTensor add(const ComplexTensor& a, const ComplexTensor& b) {
  return {add(a.re, b.re), add(a.im, b.im)};
}

ComplexTensor mul(const ComplexTensor& a, const ComplexTensor& b) {
  return {sub(mul(a.re, b.re), mul(a.im, b.im)), add(mul(a.re, b.im), mul(a.im, b.re))};
}

ComplexTensor mul(const ComplexTensor& a, const Tensor& m) { return {mul(a.re, m), mul(a.im, m)}; }

ComplexTensor matmul(const ComplexTensor& a, const ComplexTensor& w) {
  return {sub(matmul(a.re, w.re), matmul(a.im, w.im)),
          add(matmul(a.re, w.im), matmul(a.im, w.re))};
}

ComplexTensor bin_matmul(const ComplexTensor& a, const ComplexTensor& w) {
  return {sub(bin_matmul(a.re, w.re), bin_matmul(a.im, w.im)),
          add(bin_matmul(a.re, w.im), bin_matmul(a.im, w.re))};
}

ComplexTensor soft_shrink(const ComplexTensor& s, double tau) {
  return {soft_shrink(s.re, tau), soft_shrink(s.im, tau)};
}

}  // namespace ops
}  // namespace cfspm
