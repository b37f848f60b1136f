// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfspm/eval.hpp"
#include "cfspm/trainer.hpp"

namespace cfspm {

/// Run directory layout:
///   config.json
///   fold_<subject>/metrics.json, audit.jsonl, checkpoint/
///   summary.csv, summary.json
void write_config_echo(const std::filesystem::path& dir, const nlohmann::json& echo);
void write_fold(const std::filesystem::path& dir, const FoldResult& fold,
                const nlohmann::json& config_echo);
void write_summary(const std::filesystem::path& dir, const LosoResult& result);

nlohmann::json fold_metrics_json(const FoldResult& fold);
std::string audit_jsonl(const std::vector<AuditEntry>& audit);
std::string summary_csv(const std::vector<FoldResult>& folds);

struct SummaryRow {
  std::string subject;
  MetricsReport metrics;
};

/// Parses summary.csv of a run directory.
std::vector<SummaryRow> read_summary(const std::filesystem::path& dir);

/// Fraction of trials accepted at the last refresh of each fold's audit
/// log, averaged over folds; negative when the run has no audit logs.
double final_acceptance_rate(const std::filesystem::path& dir);

}  // namespace cfspm
