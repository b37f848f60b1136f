// SPDX-License-Identifier: Apache-2.0
#include "cfspm/numeric/fft.hpp"

#include <cmath>
#include <numbers>

#include "cfspm/error.hpp"

namespace cfspm::fft {

namespace {

cplx twiddle(std::size_t k, std::size_t n, bool inverse) {
  const double ang = 2.0 * std::numbers::pi * static_cast<double>(k % n) / static_cast<double>(n);
  return {std::cos(ang), inverse ? std::sin(ang) : -std::sin(ang)};
}

void radix2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const cplx w = twiddle(k * (n / len), n, inverse);
        const cplx u = a[i + k];
        const cplx v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<cplx> transform_direct(std::span<const cplx> x, bool inverse) {
  const std::size_t n = x.size();
  std::vector<cplx> out(n);
  for (std::size_t f = 0; f < n; ++f) {
    cplx acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) acc += x[t] * twiddle(f * t, n, inverse);
    out[f] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

std::vector<cplx> transform(std::span<const cplx> x, bool inverse) {
  if (x.empty()) throw ShapeError("fft of an empty sequence");
  if (!is_power_of_two(x.size())) return transform_direct(x, inverse);
  std::vector<cplx> a(x.begin(), x.end());
  radix2(a, inverse);
  if (inverse) {
    for (cplx& v : a) v /= static_cast<double>(a.size());
  }
  return a;
}

std::vector<cplx> rfft(std::span<const double> x) {
  std::vector<cplx> c(x.begin(), x.end());
  auto full = transform(c, false);
  full.resize(x.size() / 2 + 1);
  return full;
}

std::vector<double> irfft(std::span<const cplx> bins, std::size_t length) {
  if (length == 0) throw ShapeError("irfft length must be positive");
  if (bins.size() != length / 2 + 1) {
    throw ShapeError("irfft: " + std::to_string(bins.size()) + " bins inconsistent with length " +
                     std::to_string(length));
  }
  std::vector<cplx> full(length);
  for (std::size_t f = 0; f < bins.size(); ++f) full[f] = bins[f];
  full[0] = bins[0].real();
  if (length % 2 == 0) full[length / 2] = bins[length / 2].real();
  for (std::size_t f = 1; f < (length + 1) / 2; ++f) full[length - f] = std::conj(bins[f]);
  auto t = transform(full, true);
  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = t[i].real();
  return out;
}

std::vector<double> periodogram(std::span<const double> x) {
  const auto bins = rfft(x);
  std::vector<double> p(bins.size());
  for (std::size_t f = 0; f < bins.size(); ++f) {
    p[f] = std::norm(bins[f]) / static_cast<double>(x.size());
  }
  return p;
}

}  // namespace cfspm::fft
