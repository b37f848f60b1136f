// SPDX-License-Identifier: Apache-2.0
#include "cfspm/run_dir.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "cfspm/checkpoint.hpp"
#include "cfspm/error.hpp"

namespace cfspm {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

nlohmann::json metrics_json(const MetricsReport& m) {
  nlohmann::json j;
  for (std::size_t i = 0; i < std::size(kMetricNames); ++i) j[kMetricNames[i]] = metric_value(m, i);
  return j;
}

}  // namespace

void write_config_echo(const std::filesystem::path& dir, const nlohmann::json& echo) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", echo.dump(2) + "\n");
}

nlohmann::json fold_metrics_json(const FoldResult& f) {
  return {{"subject", f.subject},
          {"metrics", metrics_json(f.metrics)},
          {"stage1_losses", f.stage1_losses},
          {"stage2_losses", f.stage2_losses},
          {"accepted_per_epoch", f.accepted_per_epoch},
          {"predictions", f.predictions},
          {"stage1_gate",
           {{"accepted", f.stage1_gate.accepted},
            {"precision", f.stage1_gate.precision},
            {"raw_accuracy", f.stage1_gate.raw_accuracy}}}};
}

std::string audit_jsonl(const std::vector<AuditEntry>& audit) {
  std::string out;
  for (const auto& a : audit) {
    out += nlohmann::json{{"epoch", a.epoch},       {"trial", a.trial}, {"y_hat", a.y_hat},
                          {"r", a.r},               {"u", a.u},         {"delta_used", a.delta_used},
                          {"accepted", a.accepted}}
               .dump();
    out += '\n';
  }
  return out;
}

void write_fold(const std::filesystem::path& dir, const FoldResult& f,
                const nlohmann::json& config_echo) {
  const auto fold_dir = dir / ("fold_" + f.subject);
  std::filesystem::create_directories(fold_dir);
  write_text(fold_dir / "metrics.json", fold_metrics_json(f).dump(2) + "\n");
  write_text(fold_dir / "audit.jsonl", audit_jsonl(f.audit));
  save_checkpoint(fold_dir / "checkpoint", f.params, config_echo);
}

std::string summary_csv(const std::vector<FoldResult>& folds) {
  std::string out = "subject";
  for (const char* name : kMetricNames) out += std::string(",") + name;
  out += '\n';
  for (const auto& f : folds) {
    out += f.subject;
    for (std::size_t i = 0; i < std::size(kMetricNames); ++i) {
      out += fmt::format(",{:.6f}", metric_value(f.metrics, i));
    }
    out += '\n';
  }
  return out;
}

void write_summary(const std::filesystem::path& dir, const LosoResult& r) {
  std::filesystem::create_directories(dir);
  write_text(dir / "summary.csv", summary_csv(r.folds));
  nlohmann::json j;
  for (std::size_t i = 0; i < r.summary.size(); ++i) {
    j[kMetricNames[i]] = {{"mean", r.summary[i].mean},
                          {"std", r.summary[i].std},
                          {"formatted", format_mean_std(r.summary[i])}};
  }
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"subject", f.subject},
                     {"stage1_gate_precision", f.stage1_gate.precision},
                     {"stage1_gate_accepted", f.stage1_gate.accepted},
                     {"stage1_raw_accuracy", f.stage1_gate.raw_accuracy}});
  }
  write_text(dir / "summary.json",
             nlohmann::json{{"metrics", j}, {"folds", folds}}.dump(2) + "\n");
}

std::vector<SummaryRow> read_summary(const std::filesystem::path& dir) {
  const auto path = dir / "summary.csv";
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  std::string expected = "subject";
  for (const char* name : kMetricNames) expected += std::string(",") + name;
  if (line != expected) throw IoError(path.string() + ": unexpected header '" + line + "'");
  std::vector<SummaryRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    SummaryRow row;
    std::getline(ss, row.subject, ',');
    double v[5];
    for (double& x : v) {
      if (!std::getline(ss, cell, ',')) throw IoError(path.string() + ": short row '" + line + "'");
      try {
        x = std::stod(cell);
      } catch (const std::exception&) {
        throw IoError(path.string() + ": bad number '" + cell + "'");
      }
    }
    row.metrics = {v[0], v[1], v[2], v[3], v[4]};
    rows.push_back(row);
  }
  return rows;
}

double final_acceptance_rate(const std::filesystem::path& dir) {
  double total = 0.0;
  std::size_t folds = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto audit = entry.path() / "audit.jsonl";
    if (!entry.is_directory() || !std::filesystem::exists(audit)) continue;
    std::ifstream is(audit);
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> by_epoch;  // accepted, total
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) throw IoError(audit.string() + ": malformed line");
      auto& slot = by_epoch[j.at("epoch").get<std::size_t>()];
      slot.first += j.at("accepted").get<bool>() ? 1 : 0;
      slot.second += 1;
    }
    if (by_epoch.empty()) continue;
    const auto& last = by_epoch.rbegin()->second;
    total += static_cast<double>(last.first) / static_cast<double>(last.second);
    ++folds;
  }
  return folds ? total / static_cast<double>(folds) : -1.0;
}

}  // namespace cfspm
