// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cfspm {

/// counts[t][p]: row = true class, column = predicted (0-based).
struct ConfusionMatrix {
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
};

ConfusionMatrix confusion(std::span<const std::int64_t> truth, std::span<const std::int64_t> pred,
                          std::size_t classes);

struct MetricsReport {
  double accuracy = 0.0;
  double kappa = 0.0;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // macro over per-class F1
};

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm);
/// Labels are 1..K.
MetricsReport compute_metrics(std::span<const std::int64_t> truth,
                              std::span<const std::int64_t> pred, std::size_t classes);

/// Metric names in summary order.
inline constexpr const char* kMetricNames[] = {"accuracy", "kappa", "precision", "recall", "f1"};
double metric_value(const MetricsReport& m, std::size_t index);

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double p = 1.0;          // two-sided
  std::size_t n = 0;       // non-zero pairs
  bool exact = true;
};

/// Paired two-sided signed-rank test. Exact below 26 non-zero pairs,
/// normal approximation with tie and continuity corrections above.
/// Throws ValidationError ("insufficient pairs") below 5 non-zero pairs.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};
MeanStd mean_std(std::span<const double> values);

/// "68.23 ± 05.13" for fractions 0.6823, 0.0513 (percent, two decimals,
/// std zero-padded to width 5).
std::string format_mean_std(const MeanStd& ms);

}  // namespace cfspm
