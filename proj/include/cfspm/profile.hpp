// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "cfspm/model.hpp"
#include "cfspm/trainer.hpp"

namespace cfspm {

/// Everything needed to reproduce a run. `model` holds the base
/// architecture; ablation switches live in `train.ablations` and are
/// applied by `effective_model`.
struct RunConfig {
  std::string profile = "xw";
  ModelConfig model;
  TrainConfig train;

  ModelConfig effective_model() const { return apply_ablations(model, train.ablations); }
};

/// "xw" (30 channels, 1000 samples) or "s2019" (63 channels, 1708 samples).
RunConfig profile_by_name(const std::string& name);

/// Layers a JSON document ({"profile", "model", "train", "ablations"}) over
/// `base`; unknown keys raise ValidationError naming the key.
void merge_json(RunConfig& base, const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

void validate(const RunConfig& cfg);

/// Seed from CFSPM_SEED when set and well-formed.
std::optional<std::uint64_t> env_seed();

}  // namespace cfspm
