// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfspm/model.hpp"

namespace cfspm {

struct ParamGradError {
  std::string name;
  std::size_t numel = 0;
  /// ||g_analytic - g_fd|| / max(||g_analytic||, ||g_fd||, floor).
  double rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<ParamGradError> params;
  double max_rel_error = 0.0;
  double seconds = 0.0;
};

/// C = 4, T = 120, D = 8, one block, N_state = 4, two classes.
ModelConfig gradcheck_config();

/// Compares backward() against central differences of the cross-entropy
/// of a two-trial batch, for every parameter element.
GradcheckReport run_gradcheck(const ModelConfig& cfg, std::uint64_t seed = 0, double step = 1e-5);

}  // namespace cfspm
