// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cfspm/signal/preprocess.hpp"

namespace cfspm::signal {

using Range = std::pair<double, double>;

/// Parameters of the synthetic two-class motor-imagery cohort. Amplitudes
/// are in microvolts. Label 1 is left-hand imagery (right group
/// desynchronizes), label 2 right-hand imagery.
struct CohortSpec {
  std::size_t subjects = 8;
  std::size_t trials_per_subject = 40;
  std::size_t channels = 30;
  double duration_s = 4.0;
  double fs = 500.0;

  Range erd_attenuation{0.4, 0.8};
  Range aperiodic_exponent{1.0, 2.0};
  Range subject_gain{0.7, 1.4};
  double mu_hz = 10.0;
  double mu_jitter_hz = 1.0;
  double beta_hz = 20.0;
  double beta_jitter_hz = 2.0;

  double background_rms = 10.0;
  double mu_amplitude = 8.0;
  double beta_amplitude = 4.0;
  /// Log-normal spread of the per-trial, per-group rhythm amplitude.
  double rhythm_jitter = 0.2;
  /// Per-subject attenuation range of the rhythm on one randomly chosen
  /// hemisphere; (1, 1) disables the lesion asymmetry.
  Range lesion_attenuation{0.7, 1.0};
  double noise_level = 1.0;

  std::vector<std::size_t> left_group{8, 13, 18};    // FC3 C3 CP3
  std::vector<std::size_t> right_group{10, 15, 20};  // FC4 C4 CP4
  std::uint64_t seed = 0;
};

void validate(const CohortSpec& spec);

/// 10-20 names for 30-channel montages, "Ch<i>" otherwise.
std::vector<std::string> channel_names(std::size_t channels);

/// Trials ordered by subject, then trial; subject ids "S01", "S02", ...
std::vector<RawTrial> synthesize_cohort(const CohortSpec& spec);

/// Missing keys keep their defaults; unknown keys are rejected.
CohortSpec cohort_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CohortSpec& spec);

}  // namespace cfspm::signal
