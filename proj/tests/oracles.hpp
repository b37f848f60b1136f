// SPDX-License-Identifier: Apache-2.0
// Independent reference computations shared by the unit tests and the
// acceptance binary.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "cfspm/numeric/ops.hpp"
#include "cfspm/numeric/tape.hpp"
#include "cfspm/numeric/tensor.hpp"

namespace cfspm::oracle {

inline Tensor uniform(const Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                      double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = d(rng);
  return Tensor(shape, std::move(v));
}

/// Scalar probe sum(y * w) with a fixed random weight per output element,
/// so the adjoint is exercised against a non-trivial upstream gradient.
inline Tensor probe(const Tensor& y, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  return ops::sum(ops::mul(y, uniform(y.shape(), rng)));
}

using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

/// Norm-wise relative error between the tape gradient of f and central
/// finite differences, maximized over the inputs.
inline double gradient_error(const ScalarFn& f, std::vector<Tensor> inputs,
                             double step = 1e-6) {
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    for (Tensor& t : inputs) {
      t.set_requires_grad(true);
      t.zero_grad();
    }
    tape.backward(f(inputs));
    for (Tensor& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_data();
    double diff = 0.0, na = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + step;
      const double up = f(inputs).item();
      values[i] = keep - step;
      const double down = f(inputs).item();
      values[i] = keep;
      const double fd = (up - down) / (2.0 * step);
      diff += (analytic[k][i] - fd) * (analytic[k][i] - fd);
      na += analytic[k][i] * analytic[k][i];
      nf += fd * fd;
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nf), 1e-8});
    worst = std::max(worst, std::sqrt(diff) / denom);
  }
  return worst;
}

/// Direct O(L^2) real DFT.
inline std::vector<std::complex<double>> naive_rfft(const std::vector<double>& x) {
  const std::size_t L = x.size();
  std::vector<std::complex<double>> out(L / 2 + 1);
  for (std::size_t f = 0; f < out.size(); ++f) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < L; ++t) {
      const double ang = -2.0 * M_PI * static_cast<double>(f * t) / static_cast<double>(L);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[f] = acc;
  }
  return out;
}

/// Selective scan evaluated by materializing every state vector with plain
/// loops: h_t = exp(dt A) h_{t-1} + dt B_t u_t, y_t = C_t . h_t + D u_t.
/// Shapes follow ops::selective_scan with a batch of one: u, delta [L, E],
/// b, c [L, N], a [E, N], d [E].
inline std::vector<double> unrolled_scan(const Tensor& u, const Tensor& delta, const Tensor& b,
                                         const Tensor& c, const Tensor& a, const Tensor& d) {
  const std::size_t L = u.dim(0), E = u.dim(1), N = a.dim(1);
  std::vector<double> y(L * E, 0.0);
  for (std::size_t e = 0; e < E; ++e) {
    std::vector<std::vector<double>> h(L + 1, std::vector<double>(N, 0.0));
    for (std::size_t t = 0; t < L; ++t) {
      const double dt = delta.at({t, e});
      for (std::size_t n = 0; n < N; ++n) {
        const double abar = std::exp(dt * a.at({e, n}));
        const double bbar = dt * b.at({t, n});
        h[t + 1][n] = abar * h[t][n] + bbar * u.at({t, e});
      }
      double acc = 0.0;
      for (std::size_t n = 0; n < N; ++n) acc += c.at({t, n}) * h[t + 1][n];
      y[t * E + e] = acc + d[e] * u.at({t, e});
    }
  }
  return y;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace cfspm::oracle
