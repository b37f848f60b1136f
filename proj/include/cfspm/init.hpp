// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "cfspm/numeric/tensor.hpp"

namespace cfspm {

/// Normal(0, std) truncated at two standard deviations.
Tensor truncated_normal(Shape shape, double std, std::mt19937_64& rng);

/// A parameter leaf: requires_grad set.
inline Tensor param(Tensor t) {
  t.set_requires_grad(true);
  return t;
}

}  // namespace cfspm
