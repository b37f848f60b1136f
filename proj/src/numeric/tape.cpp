// SPDX-License-Identifier: Apache-2.0
#include "cfspm/numeric/tape.hpp"

#include <array>

#include "cfspm/error.hpp"

namespace cfspm {

namespace {
thread_local Tape* g_active_tape = nullptr;

constexpr std::array<std::string_view, 30> kPrimitiveNames = {
    "add",           "sub",         "mul",        "scale",      "add_scalar",
    "matmul",        "bin_matmul",  "transpose",  "reshape",    "concat",
    "slice",         "sum",         "mean",       "conv1d_depthwise",
    "avgpool1d",     "layer_norm",  "softmax",    "sigmoid",    "silu",
    "elu",           "softplus",    "exp",        "log",        "dropout",
    "cross_entropy", "soft_shrink", "rfft_re",    "rfft_im",    "irfft",
    "selective_scan",
};
}  // namespace

std::string_view primitive_name(Primitive kind) {
  return kPrimitiveNames.at(static_cast<std::size_t>(kind));
}

Tape::~Tape() { detach_all(); }

void Tape::record(Primitive kind, std::span<const Tensor> inputs, const Tensor& output,
                  BackwardFn backward) {
  if (consumed_) throw Error("cannot record onto a consumed tape; call clear()");
  Node node{kind, {}, {}, output.impl(), std::move(backward)};
  node.inputs.reserve(inputs.size());
  node.input_nodes.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    const auto& impl = t.impl();
    if (impl->node >= 0 && impl->tape != this) {
      throw Error("primitive input belongs to a different tape");
    }
    node.inputs.push_back(impl);
    node.input_nodes.push_back(impl->node);
  }
  auto& out = *output.impl();
  out.tape = this;
  out.node = static_cast<std::ptrdiff_t>(nodes_.size());
  out.requires_grad = true;
  nodes_.push_back(std::move(node));
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw Error("backward called twice on a consumed tape");
  if (loss.numel() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + shape_str(loss.shape()));
  }
  const auto& root = loss.impl();
  if (root->node < 0 || root->tape != this) {
    throw Error("backward on a loss that is not recorded on this tape");
  }
  consumed_ = true;
  root->grad.assign(1, 1.0);
  for (std::ptrdiff_t i = root->node; i >= 0; --i) {
    Node& node = nodes_[static_cast<std::size_t>(i)];
    auto& out = *node.output;
    if (out.grad.empty()) continue;
    node.backward(out, node.inputs);
    out.grad.clear();
    out.grad.shrink_to_fit();
  }
  detach_all();
  nodes_.clear();
}

void Tape::clear() {
  detach_all();
  nodes_.clear();
  consumed_ = false;
}

void Tape::detach_all() {
  for (Node& node : nodes_) {
    node.output->tape = nullptr;
    node.output->node = -1;
    node.output->requires_grad = false;
    node.output->grad.clear();
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

NoTapeScope::NoTapeScope() : previous_(g_active_tape) { g_active_tape = nullptr; }

NoTapeScope::~NoTapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

bool should_record(std::span<const Tensor> inputs) {
  if (g_active_tape == nullptr) return false;
  for (const Tensor& t : inputs) {
    if (t.requires_grad()) return true;
  }
  return false;
}

}  // namespace cfspm
