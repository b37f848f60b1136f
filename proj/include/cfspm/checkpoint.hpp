// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include <json.hpp>

#include "cfspm/model.hpp"

namespace cfspm {

/// Writes checkpoint.json ({"config": ..., "parameters": {name: shape}})
/// and one <name>.cfsp container per parameter into `dir`.
void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params,
                     const nlohmann::json& config_echo);

/// Fills `params` (already initialized with the right architecture) from
/// `dir`; names and shapes must match exactly. Returns the config echo.
nlohmann::json load_checkpoint(const std::filesystem::path& dir, ModelParams& params);

}  // namespace cfspm
