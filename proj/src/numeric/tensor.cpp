// SPDX-License-Identifier: Apache-2.0
#include "cfspm/numeric/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "cfspm/error.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace cfspm {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor() : Tensor(Shape{0}) {}

Tensor::Tensor(Shape shape, double fill)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  impl_->data.assign(shape_numel(shape), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  if (data.size() != shape_numel(shape)) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  impl_->shape = std::move(shape);
  impl_->data.assign(data.begin(), data.end());
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

Tensor Tensor::from(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

std::size_t Tensor::dim(int axis) const {
  const int r = static_cast<int>(rank());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_str(shape()));
  }
  return impl_->shape[static_cast<std::size_t>(a)];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != rank()) throw ShapeError("index rank mismatch");
  std::size_t flat = 0;
  std::size_t k = 0;
  for (std::size_t i : index) {
    if (i >= impl_->shape[k]) throw ShapeError("index out of range");
    flat = flat * impl_->shape[k] + i;
    ++k;
  }
  return impl_->data[flat];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  }
  return impl_->data[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

void Tensor::zero_grad() { impl_->grad.assign(impl_->data.size(), 0.0); }

Tensor Tensor::clone() const {
  Tensor t;
  t.impl_->shape = impl_->shape;
  t.impl_->data = impl_->data;
  return t;
}

void retain_freed_memory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace cfspm
