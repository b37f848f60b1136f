// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfspm/numeric/tensor.hpp"
#include "cfspm/signal/preprocess.hpp"

namespace cfspm::signal {

struct ChannelGroups {
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
};

struct SubjectData {
  std::string id;
  Tensor trials;  // [n, C, T]
  std::vector<std::int64_t> labels;  // 1..K

  std::size_t num_trials() const { return labels.size(); }
};

/// The leave-one-subject-out universe: preprocessed trials for every
/// subject sharing one montage.
struct Cohort {
  double fs = 250.0;
  std::vector<std::string> channels;
  ChannelGroups groups;
  std::vector<SubjectData> subjects;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t num_samples() const;
  std::size_t num_classes() const;
  std::size_t subject_index(const std::string& id) const;
};

/// Checks shapes, label range and group indices against the montage.
void validate(const Cohort& cohort);

/// Row `i` of a [n, C, T] stack as a [C, T] tensor.
Tensor trial_at(const Tensor& stack, std::size_t i);

/// Groups already-preprocessed trials by subject (first-seen order).
Cohort assemble_cohort(const std::vector<Trial>& trials, std::vector<std::string> channels,
                       ChannelGroups groups);

/// Writes manifest.json plus <id>_trials.cfsp / <id>_labels.cfsp into `dir`.
void write_cohort(const std::filesystem::path& dir, const Cohort& cohort);
/// `path` may name the manifest or the directory holding manifest.json.
/// Relative container paths resolve against the manifest's directory.
Cohort read_cohort(const std::filesystem::path& path);

}  // namespace cfspm::signal
