// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cfspm/error.hpp"
#include "cfspm/numeric/complex.hpp"
#include "cfspm/numeric/fft.hpp"
#include "cfspm/numeric/ops.hpp"
#include "oracles.hpp"

namespace cfspm {
namespace {

std::vector<double> random_signal(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = d(rng);
  return x;
}

TEST(Fft, RoundTripForEveryLengthUpTo128) {
  std::mt19937_64 rng(1);
  for (std::size_t L = 2; L <= 128; ++L) {
    const auto x = random_signal(L, rng);
    const auto back = fft::irfft(fft::rfft(x), L);
    EXPECT_LT(oracle::max_abs_diff(back, x), 1e-10) << "L=" << L;
  }
}

TEST(Fft, TensorRoundTripAlongTokenAxis) {
  std::mt19937_64 rng(2);
  for (std::size_t L = 2; L <= 128; ++L) {
    Tensor x = oracle::uniform({2, L, 3}, rng);
    Tensor back = ops::irfft(ops::rfft(x, 1), L, 1);
    EXPECT_LT(oracle::max_abs_diff(back.data(), x.data()), 1e-10) << "L=" << L;
  }
}

TEST(Fft, MatchesDirectDft) {
  std::mt19937_64 rng(3);
  for (std::size_t L : {2u, 5u, 6u, 7u, 16u, 33u, 64u, 66u}) {
    const auto x = random_signal(L, rng);
    const auto got = fft::rfft(x);
    const auto want = oracle::naive_rfft(x);
    ASSERT_EQ(got.size(), L / 2 + 1);
    for (std::size_t f = 0; f < got.size(); ++f) {
      EXPECT_LT(std::abs(got[f] - want[f]), 1e-10) << "L=" << L << " f=" << f;
    }
  }
}

TEST(Fft, RadixTwoAgreesWithDirectRoute) {
  std::mt19937_64 rng(4);
  for (std::size_t n : {2u, 4u, 8u, 64u, 256u}) {
    std::vector<fft::cplx> x(n);
    for (auto& v : x) v = {rng() / 1e19, rng() / 1e19};
    for (bool inv : {false, true}) {
      const auto a = fft::transform(x, inv);
      const auto b = fft::transform_direct(x, inv);
      for (std::size_t i = 0; i < n; ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-9);
    }
  }
}

TEST(Fft, Parseval) {
  std::mt19937_64 rng(5);
  for (std::size_t L = 2; L <= 128; ++L) {
    const auto x = random_signal(L, rng);
    const auto s = fft::rfft(x);
    double energy = 0.0;
    for (double v : x) energy += v * v;
    double spec = std::norm(s[0]);
    const std::size_t interior_end = L % 2 == 0 ? s.size() - 1 : s.size();
    for (std::size_t f = 1; f < interior_end; ++f) spec += 2.0 * std::norm(s[f]);
    if (L % 2 == 0) spec += std::norm(s.back());
    EXPECT_NEAR(energy, spec / static_cast<double>(L), 1e-9) << "L=" << L;
  }
}

TEST(Fft, ConstantRowIsDcOnly) {
  Tensor x({2, 66}, 0.0);
  for (std::size_t t = 0; t < 66; ++t) {
    x.mutable_data()[t] = 1.5;
    x.mutable_data()[66 + t] = -2.0;
  }
  const ComplexTensor s = ops::rfft_tokens(x);
  ASSERT_EQ(s.shape(), (Shape{2, 34}));
  EXPECT_NEAR(s.re.at({0, 0}), 1.5 * 66, 1e-12);
  EXPECT_NEAR(s.re.at({1, 0}), -2.0 * 66, 1e-12);
  for (std::size_t d = 0; d < 2; ++d) {
    EXPECT_NEAR(s.im.at({d, 0}), 0.0, 1e-12);
    for (std::size_t f = 1; f < 34; ++f) {
      EXPECT_NEAR(s.re.at({d, f}), 0.0, 1e-10);
      EXPECT_NEAR(s.im.at({d, f}), 0.0, 1e-10);
    }
  }
}

TEST(Fft, TokenRoundTripForModelLengths) {
  std::mt19937_64 rng(6);
  for (std::size_t L : {6u, 7u, 66u}) {
    Tensor x = oracle::uniform({4, L}, rng);
    Tensor back = ops::irfft_tokens(ops::rfft_tokens(x), L);
    EXPECT_LT(oracle::max_abs_diff(back.data(), x.data()), 1e-10);
  }
}

TEST(Fft, SpectralFilterGradient) {
  std::mt19937_64 rng(7);
  for (std::size_t L : {6u, 7u}) {
    const std::size_t nf = L / 2 + 1;
    const ComplexTensor w(oracle::uniform({3, nf}, rng), oracle::uniform({3, nf}, rng));
    const oracle::ScalarFn f = [&](const std::vector<Tensor>& x) {
      return ops::sum(ops::irfft_tokens(ops::mul(ops::rfft_tokens(x[0]), w), L));
    };
    EXPECT_LT(oracle::gradient_error(f, {oracle::uniform({3, L}, rng)}), 1e-6);
  }
}

TEST(Fft, SpectralErrors) {
  EXPECT_THROW(ops::irfft_tokens(ComplexTensor(Tensor({2, 4}), Tensor({2, 4})), 9),
               ShapeError);
  EXPECT_THROW(ops::rfft_tokens(Tensor({2, 0})), ShapeError);
  EXPECT_THROW(ComplexTensor(Tensor({2, 3}), Tensor({3, 2})), ShapeError);
}

TEST(Fft, ComplexSoftShrinkActsPerComponent) {
  const ComplexTensor s(Tensor::from({0.015, -0.004, 0.2}), Tensor::from({-0.5, 0.009, 0.0}));
  const ComplexTensor y = ops::soft_shrink(s, 0.01);
  EXPECT_NEAR(y.re[0], 0.005, 1e-15);
  EXPECT_EQ(y.re[1], 0.0);
  EXPECT_NEAR(y.re[2], 0.19, 1e-15);
  EXPECT_NEAR(y.im[0], -0.49, 1e-15);
  EXPECT_EQ(y.im[1], 0.0);
  const ComplexTensor same = ops::soft_shrink(s, 0.0);
  EXPECT_EQ(oracle::max_abs_diff(same.re.data(), s.re.data()), 0.0);
  EXPECT_EQ(oracle::max_abs_diff(same.im.data(), s.im.data()), 0.0);
}

TEST(Fft, PeriodogramFindsTheTone) {
  const std::size_t n = 256;
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = std::sin(2.0 * M_PI * 16.0 * t / n);
  const auto p = fft::periodogram(x);
  const auto peak = std::max_element(p.begin(), p.end()) - p.begin();
  EXPECT_EQ(peak, 16);
}

}  // namespace
}  // namespace cfspm
