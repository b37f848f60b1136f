// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace cfspm {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

namespace detail {

/// Cache-line aligned allocation. Vectorized kernels peel leading elements
/// up to an aligned address, so without this the summation order (and the
/// last bits of a result) would depend on where the heap placed a buffer.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

}  // namespace detail

using Buffer = std::vector<double, detail::AlignedAllocator<double>>;

namespace detail {

struct TensorImpl {
  Shape shape;
  Buffer data;
  Buffer grad;  // empty until materialized
  bool requires_grad = false;
  Tape* tape = nullptr;
  std::ptrdiff_t node = -1;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

/// Dense row-major array of doubles.
///
/// A Tensor is a handle: copies share storage, the way autodiff tensors in
/// most frameworks behave. Use clone() for an independent copy. Outputs of
/// primitives are always fresh storage, so only parameters are ever mutated
/// in place (by the optimizer).
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor from(std::initializer_list<double> values);

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }
  /// Extent of an axis; negative axes count from the back.
  std::size_t dim(int axis) const;

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  const double* ptr() const { return impl_->data.data(); }
  double operator[](std::size_t i) const { return impl_->data[i]; }
  double at(std::initializer_list<std::size_t> index) const;
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool has_grad() const { return impl_->grad.size() == impl_->data.size(); }
  std::span<const double> grad() const { return impl_->grad; }
  /// Materializes a zero gradient of the tensor's shape.
  void zero_grad();

  bool on_tape() const { return impl_->node >= 0; }
  std::ptrdiff_t node() const { return impl_->node; }

  Tensor clone() const;
  /// Same values, cut from the tape, no gradient requirement.
  Tensor detach() const { return clone(); }

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

bool all_finite(std::span<const double> values);

// Keeps freed tensor buffers in the process heap instead of returning them to
// the OS. A training step allocates and frees the same large buffers over and
// over; without this glibc maps and unmaps them every step. No-op elsewhere.
void retain_freed_memory();

}  // namespace cfspm
