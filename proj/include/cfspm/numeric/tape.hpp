// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "cfspm/numeric/tensor.hpp"

namespace cfspm {

enum class Primitive : std::uint8_t {
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kMatmul,
  kBinMatmul,
  kTranspose,
  kReshape,
  kConcat,
  kSlice,
  kSum,
  kMean,
  kConv1dDepthwise,
  kAvgPool1d,
  kLayerNorm,
  kSoftmax,
  kSigmoid,
  kSilu,
  kElu,
  kSoftplus,
  kExp,
  kLog,
  kDropout,
  kCrossEntropy,
  kSoftShrink,
  kRfftRe,
  kRfftIm,
  kIrfft,
  kSelectiveScan,
};

std::string_view primitive_name(Primitive kind);

/// Reverse-mode tape. Nodes are appended in evaluation order, so the
/// record list is already topologically sorted; backward() walks it once
/// from the back.
///
/// A tape belongs to one thread. Primitives record onto the tape installed
/// by the innermost TapeScope of the calling thread, and only when at least
/// one input requires a gradient.
class Tape {
 public:
  using ImplPtr = std::shared_ptr<detail::TensorImpl>;
  /// Reads out.grad (upstream adjoint) and accumulates into inputs that
  /// require gradients.
  using BackwardFn =
      std::function<void(const detail::TensorImpl& out, std::span<const ImplPtr> in)>;

  struct Node {
    Primitive kind;
    std::vector<ImplPtr> inputs;
    std::vector<std::ptrdiff_t> input_nodes;  // -1 for leaves
    ImplPtr output;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  /// Appends a node and attaches `output` to it.
  void record(Primitive kind, std::span<const Tensor> inputs, const Tensor& output,
              BackwardFn backward);

  /// Propagates d(loss)/d(.) to every requires_grad leaf reachable from
  /// `loss`, accumulating into the leaf's gradient buffer.
  void backward(const Tensor& loss);

  /// Drops all nodes and makes the tape reusable.
  void clear();

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  void detach_all();

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

/// Installs a tape as the recording target for the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;
  ~TapeScope();

 private:
  Tape* previous_;
};

/// Suspends recording on the current thread (inference inside a training
/// loop).
class NoTapeScope {
 public:
  NoTapeScope();
  NoTapeScope(const NoTapeScope&) = delete;
  NoTapeScope& operator=(const NoTapeScope&) = delete;
  ~NoTapeScope();

 private:
  Tape* previous_;
};

Tape* active_tape();

/// True when a primitive over `inputs` must be recorded.
bool should_record(std::span<const Tensor> inputs);

}  // namespace cfspm
