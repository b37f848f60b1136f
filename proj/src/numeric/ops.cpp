// SPDX-License-Identifier: Apache-2.0
#include "cfspm/numeric/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "cfspm/error.hpp"
#include "cfspm/numeric/tape.hpp"

namespace cfspm::ops {

namespace {

using ImplPtr = Tape::ImplPtr;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;
using Index = Eigen::Index;

void check_finite(Primitive kind, const Tensor& out) {
  if (!all_finite(out.data())) {
    throw NumericError(std::string("non-finite output from primitive '") +
                       std::string(primitive_name(kind)) + "'");
  }
}

template <typename Fn>
void maybe_record(Primitive kind, std::initializer_list<Tensor> inputs, const Tensor& out,
                  Fn&& backward) {
  std::span<const Tensor> ins(inputs.begin(), inputs.size());
  if (!should_record(ins)) return;
  active_tape()->record(kind, ins, out, Tape::BackwardFn(std::forward<Fn>(backward)));
}

bool recording(std::initializer_list<Tensor> inputs) {
  return should_record(std::span<const Tensor>(inputs.begin(), inputs.size()));
}

double* grad_of(const ImplPtr& p) {
  if (!p->requires_grad) return nullptr;
  p->ensure_grad();
  return p->grad.data();
}

std::size_t norm_axis(int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

// [outer, len, inner] view of a tensor around one axis.
struct AxisView {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

// Maps flat indices of the (broadcast) output onto flat indices of `b`.
// kBlock covers `b` equal to a run of a's dims followed by ones, e.g. [M,1]
// into [B,M,T]: j = (i / inner) % nb.
struct Broadcast {
  enum class Mode { kSame, kSuffix, kBlock, kGeneral } mode = Mode::kSame;
  std::size_t nb = 0;
  std::size_t inner = 1;
  Shape out_shape;
  std::vector<std::size_t> b_strides;

  std::size_t operator()(std::size_t i) const {
    switch (mode) {
      case Mode::kSame:
        return i;
      case Mode::kSuffix:
        return i % nb;
      case Mode::kBlock:
        return (i / inner) % nb;
      case Mode::kGeneral:
        break;
    }
    std::size_t r = 0;
    for (std::size_t d = out_shape.size(); d-- > 0;) {
      const std::size_t coord = i % out_shape[d];
      i /= out_shape[d];
      r += coord * b_strides[d];
    }
    return r;
  }

  // Calls fn(i, j) for every output index i in increasing order.
  template <typename Fn>
  void for_each(std::size_t n, Fn fn) const {
    switch (mode) {
      case Mode::kSame:
        for (std::size_t i = 0; i < n; ++i) fn(i, i);
        return;
      case Mode::kSuffix:
      case Mode::kBlock: {
        if (nb == 0) return;
        std::size_t i = 0;
        while (i < n) {
          for (std::size_t j = 0; j < nb; ++j) {
            const std::size_t end = i + inner;
            for (; i < end; ++i) fn(i, j);
          }
        }
        return;
      }
      case Mode::kGeneral:
        for (std::size_t i = 0; i < n; ++i) fn(i, (*this)(i));
        return;
    }
  }
};

Broadcast make_broadcast(const Shape& a, const Shape& b, Primitive kind) {
  Broadcast bc;
  bc.nb = shape_numel(b);
  bc.out_shape = a;
  if (a == b) return bc;
  const auto fail = [&] {
    throw ShapeError(std::string(primitive_name(kind)) + ": cannot broadcast " +
                     shape_str(b) + " into " + shape_str(a));
  };
  if (b.size() > a.size()) fail();
  const std::size_t off = a.size() - b.size();
  bool suffix = true;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] != a[off + i]) {
      suffix = false;
      if (b[i] != 1) fail();
    }
  }
  if (suffix) {
    bc.mode = Broadcast::Mode::kSuffix;
    return bc;
  }
  // Trailing ones of b broadcast over a contiguous inner block of a.
  std::size_t m = b.size();
  while (m > 0 && b[m - 1] == 1) --m;
  bool block = true;
  for (std::size_t i = 0; i < m; ++i) block = block && b[i] == a[off + i];
  if (block) {
    bc.mode = Broadcast::Mode::kBlock;
    for (std::size_t i = off + m; i < a.size(); ++i) bc.inner *= a[i];
    return bc;
  }
  bc.mode = Broadcast::Mode::kGeneral;
  bc.b_strides.assign(a.size(), 0);
  std::size_t stride = 1;
  for (std::size_t i = b.size(); i-- > 0;) {
    bc.b_strides[off + i] = b[i] == 1 ? 0 : stride;
    stride *= b[i];
  }
  return bc;
}

template <typename F, typename DA, typename DB>
Tensor binary(Primitive kind, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  const Broadcast bc = make_broadcast(a.shape(), b.shape(), kind);
  Tensor out(a.shape());
  const double* pa = a.ptr();
  const double* pb = b.ptr();
  double* po = out.mutable_data().data();
  bc.for_each(out.numel(), [&](std::size_t i, std::size_t j) { po[i] = f(pa[i], pb[j]); });
  check_finite(kind, out);
  maybe_record(kind, {a, b}, out,
               [bc, da, db](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 const double* g = o.grad.data();
                 const double* xa = in[0]->data.data();
                 const double* xb = in[1]->data.data();
                 double* ga = grad_of(in[0]);
                 double* gb = grad_of(in[1]);
                 const std::size_t n = o.data.size();
                 if (ga && gb) {
                   bc.for_each(n, [&](std::size_t i, std::size_t j) {
                     ga[i] += g[i] * da(xa[i], xb[j]);
                     gb[j] += g[i] * db(xa[i], xb[j]);
                   });
                 } else if (ga) {
                   bc.for_each(n, [&](std::size_t i, std::size_t j) {
                     ga[i] += g[i] * da(xa[i], xb[j]);
                   });
                 } else if (gb) {
                   bc.for_each(n, [&](std::size_t i, std::size_t j) {
                     gb[j] += g[i] * db(xa[i], xb[j]);
                   });
                 }
               });
  return out;
}

// y = f(x); dy/dx expressed through (x, y).
template <typename F, typename D>
Tensor unary(Primitive kind, const Tensor& x, F f, D d) {
  Tensor out(x.shape());
  const double* px = x.ptr();
  double* po = out.mutable_data().data();
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) po[i] = f(px[i]);
  check_finite(kind, out);
  maybe_record(kind, {x}, out, [d](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
    double* gx = grad_of(in[0]);
    if (!gx) return;
    const double* g = o.grad.data();
    const double* xv = in[0]->data.data();
    const double* yv = o.data.data();
    const std::size_t n = o.data.size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * d(xv[i], yv[i]);
  });
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Dense real-DFT matrices for one transform length.
struct DftTables {
  RowMat fwd_re;  // [nf, L]   cos(2 pi f t / L)
  RowMat fwd_im;  // [nf, L]  -sin(2 pi f t / L)
  RowMat inv_re;  // [L, nf]   w_f cos / L
  RowMat inv_im;  // [L, nf]  -w_f sin / L
};

const DftTables& dft_tables(std::size_t L) {
  thread_local std::unordered_map<std::size_t, DftTables> cache;
  auto it = cache.find(L);
  if (it != cache.end()) return it->second;
  const std::size_t nf = L / 2 + 1;
  DftTables t;
  t.fwd_re.resize(static_cast<Index>(nf), static_cast<Index>(L));
  t.fwd_im.resize(static_cast<Index>(nf), static_cast<Index>(L));
  t.inv_re.resize(static_cast<Index>(L), static_cast<Index>(nf));
  t.inv_im.resize(static_cast<Index>(L), static_cast<Index>(nf));
  for (std::size_t f = 0; f < nf; ++f) {
    const bool edge = f == 0 || (L % 2 == 0 && f == L / 2);
    const double w = edge ? 1.0 : 2.0;
    for (std::size_t k = 0; k < L; ++k) {
      const double ang =
          2.0 * std::numbers::pi * static_cast<double>((f * k) % L) / static_cast<double>(L);
      const double c = std::cos(ang);
      const double s = std::sin(ang);
      const auto fi = static_cast<Index>(f);
      const auto ki = static_cast<Index>(k);
      t.fwd_re(fi, ki) = c;
      t.fwd_im(fi, ki) = -s;
      t.inv_re(ki, fi) = w * c / static_cast<double>(L);
      t.inv_im(ki, fi) = edge ? 0.0 : -w * s / static_cast<double>(L);
    }
  }
  return cache.emplace(L, std::move(t)).first->second;
}

// out[o] (+)= M * x[o] for [outer, len_in, inner] -> [outer, len_out, inner].
void apply_along_axis(const RowMat& m, const double* x, double* out, const AxisView& in_view,
                      bool accumulate) {
  const auto rows = m.rows();
  const auto cols = m.cols();
  const auto inner = static_cast<Index>(in_view.inner);
  const auto outer = static_cast<Index>(in_view.outer);
  if (inner == 1) {
    CMap X(x, outer, cols);
    MMap Y(out, outer, rows);
    if (accumulate) {
      Y.noalias() += X * m.transpose();
    } else {
      Y.noalias() = X * m.transpose();
    }
    return;
  }
  for (Index o = 0; o < outer; ++o) {
    CMap X(x + o * cols * inner, cols, inner);
    MMap Y(out + o * rows * inner, rows, inner);
    if (accumulate) {
      Y.noalias() += m * X;
    } else {
      Y.noalias() = m * X;
    }
  }
}

Tensor rfft_part(Primitive kind, const Tensor& x, int axis, bool imag) {
  const std::size_t ax = norm_axis(axis, x.rank());
  const AxisView v = axis_view(x.shape(), ax);
  if (v.len < 2) throw ShapeError("rfft needs a transform length >= 2");
  const DftTables& tab = dft_tables(v.len);
  const RowMat& m = imag ? tab.fwd_im : tab.fwd_re;
  Shape os = x.shape();
  os[ax] = v.len / 2 + 1;
  Tensor out(os);
  apply_along_axis(m, x.ptr(), out.mutable_data().data(), v, false);
  check_finite(kind, out);
  maybe_record(kind, {x}, out,
               [v, imag](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 double* gx = grad_of(in[0]);
                 if (!gx) return;
                 const DftTables& tab = dft_tables(v.len);
                 const RowMat& m = imag ? tab.fwd_im : tab.fwd_re;
                 AxisView gv = v;
                 gv.len = v.len / 2 + 1;
                 apply_along_axis(m.transpose(), o.grad.data(), gx, gv, true);
               });
  return out;
}

double attr_double(const Attrs& a, std::string_view key) {
  auto it = a.find(key);
  if (it == a.end()) throw ValidationError("missing attribute '" + std::string(key) + "'");
  if (auto* d = std::get_if<double>(&it->second)) return *d;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  if (auto* b = std::get_if<bool>(&it->second)) return *b ? 1.0 : 0.0;
  throw ValidationError("attribute '" + std::string(key) + "' is not numeric");
}

double attr_double_or(const Attrs& a, std::string_view key, double fallback) {
  return a.contains(key) ? attr_double(a, key) : fallback;
}

std::int64_t attr_int(const Attrs& a, std::string_view key) {
  return static_cast<std::int64_t>(attr_double(a, key));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      Primitive::kAdd, a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      Primitive::kSub, a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      Primitive::kMul, a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scale(const Tensor& x, double s) {
  return unary(
      Primitive::kScale, x, [s](double v) { return v * s; },
      [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& x, double s) {
  return unary(
      Primitive::kAddScalar, x, [s](double v) { return v + s; },
      [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() != 2 || a.dim(-1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  const auto K = static_cast<Index>(b.dim(0));
  const auto N = static_cast<Index>(b.dim(1));
  const auto R = static_cast<Index>(a.numel()) / std::max<Index>(K, 1);
  Shape os = a.shape();
  os.back() = static_cast<std::size_t>(N);
  Tensor out(os);
  MMap(out.mutable_data().data(), R, N).noalias() = CMap(a.ptr(), R, K) * CMap(b.ptr(), K, N);
  check_finite(Primitive::kMatmul, out);
  maybe_record(Primitive::kMatmul, {a, b}, out,
               [R, K, N](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 CMap G(o.grad.data(), R, N);
                 if (double* ga = grad_of(in[0])) {
                   MMap(ga, R, K).noalias() += G * CMap(in[1]->data.data(), K, N).transpose();
                 }
                 if (double* gb = grad_of(in[1])) {
                   MMap(gb, K, N).noalias() += CMap(in[0]->data.data(), R, K).transpose() * G;
                 }
               });
  return out;
}

Tensor bin_matmul(const Tensor& a, const Tensor& w) {
  if (a.rank() < 2 || w.rank() != 3 || a.dim(-2) != w.dim(0) || a.dim(-1) != w.dim(1)) {
    throw ShapeError("bin_matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(w.shape()));
  }
  const auto F = static_cast<Index>(w.dim(0));
  const auto D = static_cast<Index>(w.dim(1));
  const auto E = static_cast<Index>(w.dim(2));
  const auto outer = static_cast<Index>(a.numel()) / (F * D);
  Shape os = a.shape();
  os.back() = static_cast<std::size_t>(E);
  Tensor out(os);
  double* po = out.mutable_data().data();
  for (Index o = 0; o < outer; ++o) {
    for (Index f = 0; f < F; ++f) {
      MMap(po + (o * F + f) * E, 1, E).noalias() =
          CMap(a.ptr() + (o * F + f) * D, 1, D) * CMap(w.ptr() + f * D * E, D, E);
    }
  }
  check_finite(Primitive::kBinMatmul, out);
  maybe_record(Primitive::kBinMatmul, {a, w}, out,
               [outer, F, D, E](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 double* ga = grad_of(in[0]);
                 double* gw = grad_of(in[1]);
                 const double* g = o.grad.data();
                 const double* pa = in[0]->data.data();
                 const double* pw = in[1]->data.data();
                 for (Index i = 0; i < outer; ++i) {
                   for (Index f = 0; f < F; ++f) {
                     CMap G(g + (i * F + f) * E, 1, E);
                     if (ga) {
                       MMap(ga + (i * F + f) * D, 1, D).noalias() +=
                           G * CMap(pw + f * D * E, D, E).transpose();
                     }
                     if (gw) {
                       MMap(gw + f * D * E, D, E).noalias() +=
                           CMap(pa + (i * F + f) * D, 1, D).transpose() * G;
                     }
                   }
                 }
               });
  return out;
}

Tensor transpose(const Tensor& x) {
  if (x.rank() < 2) throw ShapeError("transpose needs rank >= 2");
  const std::size_t m = x.dim(-2);
  const std::size_t n = x.dim(-1);
  const std::size_t batch = x.numel() / std::max<std::size_t>(m * n, 1);
  Shape os = x.shape();
  std::swap(os[os.size() - 1], os[os.size() - 2]);
  Tensor out(os);
  const double* px = x.ptr();
  double* po = out.mutable_data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* src = px + b * m * n;
    double* dst = po + b * m * n;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
    }
  }
  maybe_record(Primitive::kTranspose, {x}, out,
               [batch, m, n](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 double* gx = grad_of(in[0]);
                 if (!gx) return;
                 const double* g = o.grad.data();
                 for (std::size_t b = 0; b < batch; ++b) {
                   for (std::size_t i = 0; i < m; ++i) {
                     for (std::size_t j = 0; j < n; ++j) {
                       gx[b * m * n + i * n + j] += g[b * m * n + j * m + i];
                     }
                   }
                 }
               });
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(shape));
  }
  Tensor out(std::move(shape));
  std::copy(x.data().begin(), x.data().end(), out.mutable_data().begin());
  maybe_record(Primitive::kReshape, {x}, out,
               [](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 double* gx = grad_of(in[0]);
                 if (!gx) return;
                 for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i];
               });
  return out;
}

Tensor concat(std::span<const Tensor> xs, int axis) {
  if (xs.empty()) throw ShapeError("concat of zero tensors");
  const std::size_t ax = norm_axis(axis, xs[0].rank());
  Shape os = xs[0].shape();
  os[ax] = 0;
  std::vector<std::size_t> lens;
  for (const Tensor& t : xs) {
    Shape s = t.shape();
    if (s.size() != os.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != ax && s[i] != xs[0].shape()[i]) {
        throw ShapeError("concat: shape " + shape_str(s) + " incompatible with " +
                         shape_str(xs[0].shape()));
      }
    }
    lens.push_back(s[ax]);
    os[ax] += s[ax];
  }
  const AxisView v = axis_view(os, ax);
  Tensor out(os);
  double* po = out.mutable_data().data();
  std::size_t offset = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double* px = xs[k].ptr();
    const std::size_t block = lens[k] * v.inner;
    for (std::size_t o = 0; o < v.outer; ++o) {
      std::copy_n(px + o * block, block, po + o * v.len * v.inner + offset * v.inner);
    }
    offset += lens[k];
  }
  if (should_record(xs)) {
    active_tape()->record(
        Primitive::kConcat, xs, out,
        [v, lens](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
          std::size_t offset = 0;
          for (std::size_t k = 0; k < in.size(); ++k) {
            const std::size_t block = lens[k] * v.inner;
            if (double* gx = grad_of(in[k])) {
              for (std::size_t oo = 0; oo < v.outer; ++oo) {
                const double* src = o.grad.data() + oo * v.len * v.inner + offset * v.inner;
                double* dst = gx + oo * block;
                for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
              }
            }
            offset += lens[k];
          }
        });
  }
  return out;
}

Tensor slice(const Tensor& x, int axis, std::size_t begin, std::size_t end) {
  const std::size_t ax = norm_axis(axis, x.rank());
  if (begin >= end || end > x.shape()[ax]) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for axis of length " + std::to_string(x.shape()[ax]));
  }
  const AxisView v = axis_view(x.shape(), ax);
  Shape os = x.shape();
  os[ax] = end - begin;
  Tensor out(os);
  const std::size_t block = (end - begin) * v.inner;
  const double* px = x.ptr();
  double* po = out.mutable_data().data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    std::copy_n(px + o * v.len * v.inner + begin * v.inner, block, po + o * block);
  }
  maybe_record(Primitive::kSlice, {x}, out,
               [v, begin, block](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 double* gx = grad_of(in[0]);
                 if (!gx) return;
                 for (std::size_t oo = 0; oo < v.outer; ++oo) {
                   const double* src = o.grad.data() + oo * block;
                   double* dst = gx + oo * v.len * v.inner + begin * v.inner;
                   for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                 }
               });
  return out;
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tensor out = Tensor::scalar(s);
  check_finite(Primitive::kSum, out);
  maybe_record(Primitive::kSum, {x}, out,
               [](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 double* gx = grad_of(in[0]);
                 if (!gx) return;
                 for (std::size_t i = 0; i < in[0]->data.size(); ++i) gx[i] += o.grad[0];
               });
  return out;
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("mean of empty tensor");
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double n = static_cast<double>(x.numel());
  Tensor out = Tensor::scalar(s / n);
  check_finite(Primitive::kMean, out);
  maybe_record(Primitive::kMean, {x}, out,
               [n](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 double* gx = grad_of(in[0]);
                 if (!gx) return;
                 for (std::size_t i = 0; i < in[0]->data.size(); ++i) gx[i] += o.grad[0] / n;
               });
  return out;
}

Tensor conv1d_depthwise(const Tensor& x, const Tensor& kernel) {
  if (x.rank() != 3 || kernel.rank() != 2 || kernel.dim(0) != x.dim(1)) {
    throw ShapeError("conv1d_depthwise: expected x [B, C, T] and kernel [C, K], got " +
                     shape_str(x.shape()) + " and " + shape_str(kernel.shape()));
  }
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), K = kernel.dim(1);
  if (K % 2 == 0) throw ShapeError("conv1d_depthwise: kernel length must be odd");
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(K / 2);
  Tensor out(x.shape());
  const double* px = x.ptr();
  const double* pk = kernel.ptr();
  double* po = out.mutable_data().data();
  const auto Ti = static_cast<std::ptrdiff_t>(T);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const double* xr = px + (b * C + c) * T;
      double* yr = po + (b * C + c) * T;
      for (std::size_t j = 0; j < K; ++j) {
        const double w = pk[c * K + j];
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(j) - pad;
        const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -off);
        const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(Ti, Ti - off);
        for (std::ptrdiff_t t = t0; t < t1; ++t) yr[t] += w * xr[t + off];
      }
    }
  }
  check_finite(Primitive::kConv1dDepthwise, out);
  maybe_record(
      Primitive::kConv1dDepthwise, {x, kernel}, out,
      [B, C, T, K, pad](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
        double* gx = grad_of(in[0]);
        double* gk = grad_of(in[1]);
        const double* g = o.grad.data();
        const double* px = in[0]->data.data();
        const double* pk = in[1]->data.data();
        const auto Ti = static_cast<std::ptrdiff_t>(T);
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t c = 0; c < C; ++c) {
            const double* gr = g + (b * C + c) * T;
            const double* xr = px + (b * C + c) * T;
            for (std::size_t j = 0; j < K; ++j) {
              const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(j) - pad;
              const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -off);
              const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(Ti, Ti - off);
              if (gx) {
                const double w = pk[c * K + j];
                double* gxr = gx + (b * C + c) * T;
                for (std::ptrdiff_t t = t0; t < t1; ++t) gxr[t + off] += w * gr[t];
              }
              if (gk) {
                // Four partial sums so the reduction vectorizes.
                double acc[4] = {0.0, 0.0, 0.0, 0.0};
                std::ptrdiff_t t = t0;
                for (; t + 4 <= t1; t += 4) {
                  for (int q = 0; q < 4; ++q) acc[q] += gr[t + q] * xr[t + q + off];
                }
                for (; t < t1; ++t) acc[0] += gr[t] * xr[t + off];
                gk[c * K + j] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
              }
            }
          }
        }
      });
  return out;
}

Tensor avgpool1d(const Tensor& x, std::size_t window, std::size_t stride) {
  if (x.rank() < 1 || window == 0 || stride == 0) {
    throw ShapeError("avgpool1d: invalid window/stride");
  }
  const std::size_t T = x.dim(-1);
  if (T < window) {
    throw ShapeError("avgpool1d: input length " + std::to_string(T) +
                     " shorter than pooling window " + std::to_string(window));
  }
  const std::size_t L = (T - window) / stride + 1;
  const std::size_t rows = x.numel() / T;
  Shape os = x.shape();
  os.back() = L;
  Tensor out(os);
  const double* px = x.ptr();
  double* po = out.mutable_data().data();
  const double inv = 1.0 / static_cast<double>(window);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t l = 0; l < L; ++l) {
      double s = 0.0;
      const double* src = px + r * T + l * stride;
      for (std::size_t k = 0; k < window; ++k) s += src[k];
      po[r * L + l] = s * inv;
    }
  }
  check_finite(Primitive::kAvgPool1d, out);
  maybe_record(Primitive::kAvgPool1d, {x}, out,
               [rows, T, L, window, stride, inv](const detail::TensorImpl& o,
                                                 std::span<const ImplPtr> in) {
                 double* gx = grad_of(in[0]);
                 if (!gx) return;
                 for (std::size_t r = 0; r < rows; ++r) {
                   for (std::size_t l = 0; l < L; ++l) {
                     const double g = o.grad[r * L + l] * inv;
                     double* dst = gx + r * T + l * stride;
                     for (std::size_t k = 0; k < window; ++k) dst[k] += g;
                   }
                 }
               });
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() < 1) throw ShapeError("layer_norm needs rank >= 1");
  const std::size_t D = x.dim(-1);
  if (gamma.shape() != Shape{D} || beta.shape() != Shape{D}) {
    throw ShapeError("layer_norm: gamma/beta must have shape [" + std::to_string(D) + "]");
  }
  const std::size_t rows = x.numel() / D;
  const bool rec = recording({x, gamma, beta});
  auto xhat = std::make_shared<Buffer>(rec ? x.numel() : 0);
  auto rstd = std::make_shared<Buffer>(rec ? rows : 0);
  Tensor out(x.shape());
  const double* px = x.ptr();
  const double* pg = gamma.ptr();
  const double* pb = beta.ptr();
  double* po = out.mutable_data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = px + r * D;
    double mu = 0.0;
    for (std::size_t i = 0; i < D; ++i) mu += xr[i];
    mu /= static_cast<double>(D);
    double var = 0.0;
    for (std::size_t i = 0; i < D; ++i) var += (xr[i] - mu) * (xr[i] - mu);
    var /= static_cast<double>(D);
    const double rs = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < D; ++i) {
      const double h = (xr[i] - mu) * rs;
      if (rec) (*xhat)[r * D + i] = h;
      po[r * D + i] = h * pg[i] + pb[i];
    }
    if (rec) (*rstd)[r] = rs;
  }
  check_finite(Primitive::kLayerNorm, out);
  maybe_record(Primitive::kLayerNorm, {x, gamma, beta}, out,
               [rows, D, xhat, rstd](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 double* gx = grad_of(in[0]);
                 double* gg = grad_of(in[1]);
                 double* gb = grad_of(in[2]);
                 const double* pg = in[1]->data.data();
                 const double* g = o.grad.data();
                 const double invD = 1.0 / static_cast<double>(D);
                 for (std::size_t r = 0; r < rows; ++r) {
                   const double* gr = g + r * D;
                   const double* hr = xhat->data() + r * D;
                   double m1 = 0.0, m2 = 0.0;
                   for (std::size_t i = 0; i < D; ++i) {
                     const double gh = gr[i] * pg[i];
                     m1 += gh;
                     m2 += gh * hr[i];
                     if (gg) gg[i] += gr[i] * hr[i];
                     if (gb) gb[i] += gr[i];
                   }
                   m1 *= invD;
                   m2 *= invD;
                   if (gx) {
                     const double rs = (*rstd)[r];
                     for (std::size_t i = 0; i < D; ++i) {
                       gx[r * D + i] += rs * (gr[i] * pg[i] - m1 - hr[i] * m2);
                     }
                   }
                 }
               });
  return out;
}

Tensor softmax(const Tensor& x) {
  if (x.rank() < 1 || x.dim(-1) == 0) throw ShapeError("softmax needs a non-empty last axis");
  const std::size_t K = x.dim(-1);
  const std::size_t rows = x.numel() / K;
  Tensor out(x.shape());
  const double* px = x.ptr();
  double* po = out.mutable_data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = px + r * K;
    double* yr = po + r * K;
    const double mx = *std::max_element(xr, xr + K);
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      yr[k] = std::exp(xr[k] - mx);
      s += yr[k];
    }
    for (std::size_t k = 0; k < K; ++k) yr[k] /= s;
  }
  check_finite(Primitive::kSoftmax, out);
  maybe_record(Primitive::kSoftmax, {x}, out,
               [rows, K](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 double* gx = grad_of(in[0]);
                 if (!gx) return;
                 for (std::size_t r = 0; r < rows; ++r) {
                   const double* y = o.data.data() + r * K;
                   const double* g = o.grad.data() + r * K;
                   double dot = 0.0;
                   for (std::size_t k = 0; k < K; ++k) dot += g[k] * y[k];
                   for (std::size_t k = 0; k < K; ++k) gx[r * K + k] += y[k] * (g[k] - dot);
                 }
               });
  return out;
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      Primitive::kSigmoid, x, [](double v) { return stable_sigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor silu(const Tensor& x) {
  return unary(
      Primitive::kSilu, x, [](double v) { return v * stable_sigmoid(v); },
      [](double v, double) {
        const double s = stable_sigmoid(v);
        return s * (1.0 + v * (1.0 - s));
      });
}

Tensor elu(const Tensor& x) {
  // alpha = 1; derivative at 0 taken from the right.
  return unary(
      Primitive::kElu, x, [](double v) { return v >= 0.0 ? v : std::expm1(v); },
      [](double v, double) { return v >= 0.0 ? 1.0 : std::exp(v); });
}

Tensor softplus(const Tensor& x) {
  return unary(
      Primitive::kSoftplus, x,
      [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v, double) { return stable_sigmoid(v); });
}

Tensor exp(const Tensor& x) {
  return unary(
      Primitive::kExp, x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(
      Primitive::kLog, x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor soft_shrink(const Tensor& x, double tau) {
  if (!(tau >= 0.0)) throw ValidationError("soft_shrink: tau must be non-negative");
  return unary(
      Primitive::kSoftShrink, x,
      [tau](double v) {
        if (v > tau) return v - tau;
        if (v < -tau) return v + tau;
        return 0.0;
      },
      // Right-limit subgradient at the kinks +-tau.
      [tau](double v, double) { return (v >= tau || v < -tau) ? 1.0 : 0.0; });
}

Tensor dropout(const Tensor& x, bool train, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("dropout rate must lie in [0, 1]");
  if (!train || rate == 0.0) return x;
  auto mask = std::make_shared<Buffer>(x.numel(), 0.0);
  if (rate < 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double keep = 1.0 / (1.0 - rate);
    for (double& m : *mask) m = unif(rng) >= rate ? keep : 0.0;
  }
  Tensor out(x.shape());
  double* po = out.mutable_data().data();
  for (std::size_t i = 0; i < x.numel(); ++i) po[i] = x[i] * (*mask)[i];
  maybe_record(Primitive::kDropout, {x}, out,
               [mask](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 double* gx = grad_of(in[0]);
                 if (!gx) return;
                 for (std::size_t i = 0; i < o.grad.size(); ++i) gx[i] += o.grad[i] * (*mask)[i];
               });
  return out;
}

Tensor cross_entropy(const Tensor& logits, const Tensor& target, double divisor) {
  if (logits.rank() != 2 || target.shape() != logits.shape()) {
    throw ShapeError("cross_entropy: logits and target must both be [B, K], got " +
                     shape_str(logits.shape()) + " and " + shape_str(target.shape()));
  }
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  for (double t : target.data()) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw ValidationError("cross_entropy: targets must be finite and non-negative");
    }
  }
  const double div = divisor > 0.0 ? divisor : static_cast<double>(B);
  auto probs = std::make_shared<Buffer>(B * K);
  double loss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const double* z = logits.ptr() + b * K;
    const double mx = *std::max_element(z, z + K);
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += std::exp(z[k] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t k = 0; k < K; ++k) {
      (*probs)[b * K + k] = std::exp(z[k] - lse);
      const double t = target[b * K + k];
      if (t != 0.0) loss -= t * (z[k] - lse);
    }
  }
  Tensor out = Tensor::scalar(loss / div);
  check_finite(Primitive::kCrossEntropy, out);
  maybe_record(Primitive::kCrossEntropy, {logits, target}, out,
               [B, K, div, probs](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 double* gz = grad_of(in[0]);
                 if (!gz) return;
                 const double* t = in[1]->data.data();
                 const double g = o.grad[0] / div;
                 for (std::size_t b = 0; b < B; ++b) {
                   double mass = 0.0;
                   for (std::size_t k = 0; k < K; ++k) mass += t[b * K + k];
                   if (mass == 0.0) continue;
                   for (std::size_t k = 0; k < K; ++k) {
                     gz[b * K + k] += g * ((*probs)[b * K + k] * mass - t[b * K + k]);
                   }
                 }
               });
  return out;
}

Tensor rfft_re(const Tensor& x, int axis) { return rfft_part(Primitive::kRfftRe, x, axis, false); }

Tensor rfft_im(const Tensor& x, int axis) { return rfft_part(Primitive::kRfftIm, x, axis, true); }

Tensor irfft(const Tensor& re, const Tensor& im, std::size_t length, int axis) {
  if (re.shape() != im.shape()) throw ShapeError("irfft: real/imaginary shapes differ");
  if (length == 0) throw ShapeError("irfft: length must be positive");
  const std::size_t ax = norm_axis(axis, re.rank());
  const AxisView v = axis_view(re.shape(), ax);
  if (v.len != length / 2 + 1) {
    throw ShapeError("irfft: " + std::to_string(v.len) + " bins inconsistent with length " +
                     std::to_string(length));
  }
  if (length < 2) throw ShapeError("irfft needs length >= 2");
  const DftTables& tab = dft_tables(length);
  Shape os = re.shape();
  os[ax] = length;
  Tensor out(os);
  double* po = out.mutable_data().data();
  apply_along_axis(tab.inv_re, re.ptr(), po, v, false);
  apply_along_axis(tab.inv_im, im.ptr(), po, v, true);
  check_finite(Primitive::kIrfft, out);
  maybe_record(Primitive::kIrfft, {re, im}, out,
               [v, length](const detail::TensorImpl& o, std::span<const ImplPtr> in) {
                 const DftTables& tab = dft_tables(length);
                 AxisView gv = v;
                 gv.len = length;
                 if (double* gr = grad_of(in[0])) {
                   apply_along_axis(tab.inv_re.transpose(), o.grad.data(), gr, gv, true);
                 }
                 if (double* gi = grad_of(in[1])) {
                   apply_along_axis(tab.inv_im.transpose(), o.grad.data(), gi, gv, true);
                 }
               });
  return out;
}

Tensor selective_scan(const Tensor& u, const Tensor& delta, const Tensor& b, const Tensor& c,
                      const Tensor& a, const Tensor& d_skip) {
  const bool batched = u.rank() == 3;
  if (!(u.rank() == 2 || batched) || delta.shape() != u.shape() || a.rank() != 2 ||
      b.rank() != u.rank() || c.shape() != b.shape()) {
    throw ShapeError("selective_scan: expected u, delta [B, L, E], b, c [B, L, N], a [E, N]");
  }
  const std::size_t Bn = batched ? u.dim(0) : 1;
  const std::size_t L = u.dim(-2), E = u.dim(-1), N = a.dim(1);
  if (a.dim(0) != E || b.dim(-1) != N || b.dim(-2) != L || (batched && b.dim(0) != Bn) ||
      d_skip.shape() != Shape{E}) {
    throw ShapeError("selective_scan: inconsistent extents u " + shape_str(u.shape()) +
                     ", b " + shape_str(b.shape()) + ", a " + shape_str(a.shape()) +
                     ", d " + shape_str(d_skip.shape()));
  }
  for (double v : delta.data()) {
    if (!(v > 0.0)) throw NumericError("selective_scan: step sizes must be positive");
  }
  for (double v : a.data()) {
    if (!(v < 0.0)) throw NumericError("selective_scan: state matrix must be strictly negative");
  }
  const bool rec = recording({u, delta, b, c, a, d_skip});
  // States and per-step decays laid out [B, E, L, N].
  auto states = std::make_shared<Buffer>(rec ? Bn * E * L * N : 0);
  auto decays = std::make_shared<Buffer>(rec ? Bn * E * L * N : 0);
  Tensor out(u.shape());
  const double* pu = u.ptr();
  const double* pd = delta.ptr();
  const double* pb = b.ptr();
  const double* pc = c.ptr();
  const double* pa = a.ptr();
  const double* pD = d_skip.ptr();
  double* po = out.mutable_data().data();
  Buffer h(N), dec(N);
  for (std::size_t bi = 0; bi < Bn; ++bi) {
    for (std::size_t e = 0; e < E; ++e) {
      std::fill(h.begin(), h.end(), 0.0);
      const double* ae = pa + e * N;
      for (std::size_t t = 0; t < L; ++t) {
        const std::size_t iu = (bi * L + t) * E + e;
        const double dt = pd[iu];
        const double du = dt * pu[iu];
        const double* bt = pb + (bi * L + t) * N;
        const double* ct = pc + (bi * L + t) * N;
        for (std::size_t n = 0; n < N; ++n) dec[n] = std::exp(dt * ae[n]);
        double y = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
          h[n] = dec[n] * h[n] + du * bt[n];
          y += ct[n] * h[n];
        }
        po[iu] = y + pD[e] * pu[iu];
        if (rec) {
          const std::size_t at = ((bi * E + e) * L + t) * N;
          std::copy(h.begin(), h.end(), states->begin() + at);
          std::copy(dec.begin(), dec.end(), decays->begin() + at);
        }
      }
    }
  }
  check_finite(Primitive::kSelectiveScan, out);
  maybe_record(
      Primitive::kSelectiveScan, {u, delta, b, c, a, d_skip}, out,
      [Bn, L, E, N, states, decays](const detail::TensorImpl& o,
                                    std::span<const ImplPtr> in) {
        double* gu = grad_of(in[0]);
        double* gdl = grad_of(in[1]);
        double* gb = grad_of(in[2]);
        double* gc = grad_of(in[3]);
        double* ga = grad_of(in[4]);
        double* gD = grad_of(in[5]);
        const double* pu = in[0]->data.data();
        const double* pd = in[1]->data.data();
        const double* pb = in[2]->data.data();
        const double* pc = in[3]->data.data();
        const double* pa = in[4]->data.data();
        const double* pD = in[5]->data.data();
        const double* g = o.grad.data();
        // Absent gradients go to scratch rows so the inner loop stays branch-free.
        Buffer dh(N), zeros(N, 0.0), sink_b(N), sink_c(N), sink_a(N);
        for (std::size_t bi = 0; bi < Bn; ++bi) {
          for (std::size_t e = 0; e < E; ++e) {
            std::fill(dh.begin(), dh.end(), 0.0);
            const double* ae = pa + e * N;
            double* gae = ga ? ga + e * N : sink_a.data();
            const double* hs = states->data() + (bi * E + e) * L * N;
            const double* ds = decays->data() + (bi * E + e) * L * N;
            for (std::size_t t = L; t-- > 0;) {
              const std::size_t iu = (bi * L + t) * E + e;
              const double gy = g[iu];
              const double dt = pd[iu];
              const double ut = pu[iu];
              const double* bt = pb + (bi * L + t) * N;
              const double* ct = pc + (bi * L + t) * N;
              const double* ht = hs + t * N;
              const double* dc = ds + t * N;
              const double* hp = t > 0 ? hs + (t - 1) * N : zeros.data();
              double* gbt = gb ? gb + (bi * L + t) * N : sink_b.data();
              double* gct = gc ? gc + (bi * L + t) * N : sink_c.data();
              double g_dt = 0.0;
              double g_u = gy * pD[e];
              if (gD) gD[e] += gy * ut;
              const double dtu = dt * ut;
              for (std::size_t n = 0; n < N; ++n) {
                gct[n] += gy * ht[n];
                const double dhn = dh[n] + gy * ct[n];
                const double hd = hp[n] * dc[n];
                g_dt += dhn * (ut * bt[n] + hd * ae[n]);
                g_u += dhn * dt * bt[n];
                gbt[n] += dhn * dtu;
                gae[n] += dhn * hd * dt;
                dh[n] = dhn * dc[n];
              }
              if (gdl) gdl[iu] += g_dt;
              if (gu) gu[iu] += g_u;
            }
          }
        }
      });
  return out;
}

Tensor apply_primitive(std::string_view kind, std::span<const Tensor> in, const Attrs& attrs) {
  const auto need = [&](std::size_t n) {
    if (in.size() != n) {
      throw ShapeError("primitive '" + std::string(kind) + "' expects " + std::to_string(n) +
                       " inputs, got " + std::to_string(in.size()));
    }
  };
  if (kind == "add") return need(2), add(in[0], in[1]);
  if (kind == "sub") return need(2), sub(in[0], in[1]);
  if (kind == "mul") return need(2), mul(in[0], in[1]);
  if (kind == "scale") return need(1), scale(in[0], attr_double(attrs, "s"));
  if (kind == "add_scalar") return need(1), add_scalar(in[0], attr_double(attrs, "s"));
  if (kind == "matmul") return need(2), matmul(in[0], in[1]);
  if (kind == "bin_matmul") return need(2), bin_matmul(in[0], in[1]);
  if (kind == "transpose") return need(1), transpose(in[0]);
  if (kind == "reshape") {
    need(1);
    auto it = attrs.find("shape");
    if (it == attrs.end() || !std::holds_alternative<Shape>(it->second)) {
      throw ValidationError("reshape needs a 'shape' attribute");
    }
    return reshape(in[0], std::get<Shape>(it->second));
  }
  if (kind == "concat") return concat(in, static_cast<int>(attr_int(attrs, "axis")));
  if (kind == "slice") {
    need(1);
    return slice(in[0], static_cast<int>(attr_int(attrs, "axis")),
                 static_cast<std::size_t>(attr_int(attrs, "begin")),
                 static_cast<std::size_t>(attr_int(attrs, "end")));
  }
  if (kind == "sum") return need(1), sum(in[0]);
  if (kind == "mean") return need(1), mean(in[0]);
  if (kind == "conv1d_depthwise") return need(2), conv1d_depthwise(in[0], in[1]);
  if (kind == "avgpool1d") {
    need(1);
    return avgpool1d(in[0], static_cast<std::size_t>(attr_int(attrs, "window")),
                     static_cast<std::size_t>(attr_int(attrs, "stride")));
  }
  if (kind == "layer_norm") {
    need(3);
    return layer_norm(in[0], in[1], in[2], attr_double_or(attrs, "eps", 1e-5));
  }
  if (kind == "softmax") return need(1), softmax(in[0]);
  if (kind == "sigmoid") return need(1), sigmoid(in[0]);
  if (kind == "silu") return need(1), silu(in[0]);
  if (kind == "elu") return need(1), elu(in[0]);
  if (kind == "softplus") return need(1), softplus(in[0]);
  if (kind == "exp") return need(1), exp(in[0]);
  if (kind == "log") return need(1), log(in[0]);
  if (kind == "soft_shrink") return need(1), soft_shrink(in[0], attr_double(attrs, "tau"));
  if (kind == "dropout") {
    need(1);
    return dropout(in[0], attr_double(attrs, "train") != 0.0, attr_double(attrs, "rate"),
                   static_cast<std::uint64_t>(attr_int(attrs, "seed")));
  }
  if (kind == "cross_entropy") {
    need(2);
    return cross_entropy(in[0], in[1], attr_double_or(attrs, "divisor", 0.0));
  }
  if (kind == "rfft_re") return need(1), rfft_re(in[0], static_cast<int>(attr_int(attrs, "axis")));
  if (kind == "rfft_im") return need(1), rfft_im(in[0], static_cast<int>(attr_int(attrs, "axis")));
  if (kind == "irfft") {
    need(2);
    return irfft(in[0], in[1], static_cast<std::size_t>(attr_int(attrs, "length")),
                 static_cast<int>(attr_int(attrs, "axis")));
  }
  if (kind == "selective_scan") {
    need(6);
    return selective_scan(in[0], in[1], in[2], in[3], in[4], in[5]);
  }
  throw ValidationError("unknown primitive '" + std::string(kind) + "'");
}

}  // namespace cfspm::ops
