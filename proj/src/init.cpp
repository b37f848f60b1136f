// SPDX-License-Identifier: Apache-2.0
#include "cfspm/init.hpp"

#include <cmath>

namespace cfspm {

Tensor truncated_normal(Shape shape, double std, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& v : t.mutable_data()) {
    double z;
    do {
      z = gauss(rng);
    } while (std::abs(z) > 2.0);
    v = std * z;
  }
  return t;
}

}  // namespace cfspm
