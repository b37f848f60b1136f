// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "cfspm/error.hpp"
#include "cfspm/numeric/ops.hpp"
#include "cfspm/numeric/tape.hpp"
#include "cfspm/numeric/tensor.hpp"

namespace cfspm {
namespace {

TEST(Tensor, ShapeAndIndexing) {
  Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.dim(-1), 3u);
  EXPECT_EQ(t.dim(0), 2u);
  EXPECT_DOUBLE_EQ(t.at({1, 2}), 5.0);
  EXPECT_THROW(t.dim(2), ShapeError);
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_THROW(t.item(), ShapeError);
  EXPECT_DOUBLE_EQ(Tensor::scalar(4.5).item(), 4.5);
}

TEST(Tensor, CopiesShareStorageAndCloneDoesNot) {
  Tensor a = Tensor::from({1, 2, 3});
  Tensor b = a;
  Tensor c = a.clone();
  a.mutable_data()[0] = 7.0;
  EXPECT_TRUE(a.same_storage(b));
  EXPECT_DOUBLE_EQ(b[0], 7.0);
  EXPECT_FALSE(a.same_storage(c));
  EXPECT_DOUBLE_EQ(c[0], 1.0);
}

TEST(Tape, RecordsOnlyWhenAnInputRequiresGrad) {
  Tape tape;
  TapeScope scope(tape);
  Tensor a = Tensor::from({1, 2});
  Tensor b = Tensor::from({3, 4});
  Tensor c = ops::add(a, b);
  EXPECT_FALSE(c.on_tape());
  EXPECT_EQ(tape.size(), 0u);
  a.set_requires_grad(true);
  Tensor d = ops::add(a, b);
  EXPECT_TRUE(d.on_tape());
  EXPECT_EQ(tape.size(), 1u);
}

TEST(Tape, NothingRecordsWithoutAScope) {
  Tensor a = Tensor::from({1, 2});
  a.set_requires_grad(true);
  EXPECT_FALSE(ops::exp(a).on_tape());
}

TEST(Tape, NoTapeScopeSuspendsRecording) {
  Tape tape;
  TapeScope scope(tape);
  Tensor a = Tensor::from({1, 2});
  a.set_requires_grad(true);
  {
    NoTapeScope off;
    EXPECT_EQ(active_tape(), nullptr);
    EXPECT_FALSE(ops::exp(a).on_tape());
  }
  EXPECT_EQ(active_tape(), &tape);
  EXPECT_TRUE(ops::exp(a).on_tape());
}

TEST(Tape, AccumulatesGradientOverRepeatedUse) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x = Tensor::from({2.0, -1.0});
  x.set_requires_grad(true);
  x.zero_grad();
  // f = sum(x * x + 3 x): df/dx = 2x + 3.
  Tensor f = ops::sum(ops::add(ops::mul(x, x), ops::scale(x, 3.0)));
  tape.backward(f);
  EXPECT_DOUBLE_EQ(x.grad()[0], 7.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], 1.0);
}

TEST(Tape, BackwardTwiceIsAnError) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x = Tensor::from({1.0});
  x.set_requires_grad(true);
  Tensor f = ops::sum(ops::exp(x));
  tape.backward(f);
  EXPECT_TRUE(tape.consumed());
  EXPECT_THROW(tape.backward(f), Error);
  EXPECT_THROW(ops::exp(x), Error);
  tape.clear();
  EXPECT_FALSE(tape.consumed());
  EXPECT_NO_THROW(tape.backward(ops::sum(ops::exp(x))));
}

TEST(Tape, BackwardNeedsARecordedScalar) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x = Tensor::from({1.0, 2.0});
  x.set_requires_grad(true);
  EXPECT_THROW(tape.backward(ops::exp(x)), ShapeError);
  EXPECT_THROW(tape.backward(Tensor::scalar(1.0)), Error);
}

TEST(Tape, GradientsReachOnlyRequiringLeaves) {
  Tape tape;
  TapeScope scope(tape);
  Tensor x = Tensor::from({1.0, 2.0});
  Tensor w = Tensor::from({3.0, 4.0});
  w.set_requires_grad(true);
  w.zero_grad();
  tape.backward(ops::sum(ops::mul(x, w)));
  EXPECT_FALSE(x.has_grad());
  EXPECT_DOUBLE_EQ(w.grad()[0], 1.0);
  EXPECT_DOUBLE_EQ(w.grad()[1], 2.0);
  // Intermediates are cut loose once backward has run.
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Ops, ShapeRulesAreEnforced) {
  Tensor a({2, 3});
  Tensor b({3, 2});
  EXPECT_THROW(ops::add(a, b), ShapeError);
  EXPECT_THROW(ops::matmul(a, a), ShapeError);
  EXPECT_THROW(ops::reshape(a, {4}), ShapeError);
  EXPECT_THROW(ops::slice(a, 1, 2, 5), ShapeError);
  EXPECT_NO_THROW(ops::matmul(a, b));
}

TEST(Ops, NonFiniteResultsAreRefused) {
  EXPECT_THROW(ops::log(Tensor::from({-1.0})), NumericError);
  EXPECT_THROW(ops::exp(Tensor::from({1000.0})), NumericError);
}

TEST(Ops, NamedDispatchMatchesDirectCalls) {
  Tensor a = Tensor::from({1, 2, 3});
  Tensor b = Tensor::from({4, 5, 6});
  const std::vector<Tensor> in{a, b};
  Tensor y = ops::apply_primitive("mul", in);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(y[i], a[i] * b[i]);
  EXPECT_THROW(ops::apply_primitive("no_such_op", in), Error);
  EXPECT_THROW(ops::apply_primitive("exp", in), ShapeError);
}

}  // namespace
}  // namespace cfspm
