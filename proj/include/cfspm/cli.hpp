// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cfspm {

/// Exit codes: 0 success, 1 invalid input or configuration, 2 runtime
/// failure (including a failed gradient check).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace cfspm
