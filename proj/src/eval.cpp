// SPDX-License-Identifier: Apache-2.0
#include "cfspm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "cfspm/error.hpp"

namespace cfspm {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

ConfusionMatrix confusion(std::span<const std::int64_t> truth, std::span<const std::int64_t> pred,
                          std::size_t classes) {
  if (truth.size() != pred.size()) {
    throw ValidationError(fmt::format("metrics: {} labels against {} predictions", truth.size(),
                                      pred.size()));
  }
  ConfusionMatrix cm{std::vector<std::vector<std::size_t>>(classes, std::vector<std::size_t>(classes))};
  const auto k = static_cast<std::int64_t>(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 1 || truth[i] > k || pred[i] < 1 || pred[i] > k) {
      throw ValidationError(fmt::format("metrics: label outside 1..{} at index {}", classes, i));
    }
    ++cm.counts[truth[i] - 1][pred[i] - 1];
  }
  return cm;
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
  const std::size_t k = cm.counts.size();
  const double n = static_cast<double>(cm.total());
  MetricsReport m;
  if (n == 0) return m;
  std::vector<double> row(k, 0.0), col(k, 0.0);
  double trace = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t p = 0; p < k; ++p) {
      row[t] += static_cast<double>(cm.counts[t][p]);
      col[p] += static_cast<double>(cm.counts[t][p]);
    }
    trace += static_cast<double>(cm.counts[t][t]);
  }
  m.accuracy = trace / n;
  double pe = 0.0;
  for (std::size_t c = 0; c < k; ++c) pe += (row[c] / n) * (col[c] / n);
  m.kappa = pe == 1.0 ? 0.0 : (m.accuracy - pe) / (1.0 - pe);
  for (std::size_t c = 0; c < k; ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    const double prec = col[c] > 0 ? tp / col[c] : 0.0;
    const double rec = row[c] > 0 ? tp / row[c] : 0.0;
    m.precision += prec;
    m.recall += rec;
    m.f1 += prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  m.precision /= static_cast<double>(k);
  m.recall /= static_cast<double>(k);
  m.f1 /= static_cast<double>(k);
  return m;
}

MetricsReport compute_metrics(std::span<const std::int64_t> truth,
                              std::span<const std::int64_t> pred, std::size_t classes) {
  return metrics_from_confusion(confusion(truth, pred, classes));
}

double metric_value(const MetricsReport& m, std::size_t index) {
  switch (index) {
    case 0: return m.accuracy;
    case 1: return m.kappa;
    case 2: return m.precision;
    case 3: return m.recall;
    case 4: return m.f1;
  }
  throw ValidationError("metric index out of range");
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("wilcoxon: paired samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  const std::size_t n = d.size();
  if (n < 5) {
    throw ValidationError(fmt::format("wilcoxon: insufficient pairs ({} non-zero differences)", n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });

  // Doubled ranks keep average ranks integral.
  std::vector<std::int64_t> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const auto avg2 = static_cast<std::int64_t>(i + 1 + j + 1);  // 2 * mean(i+1..j+1)
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = avg2;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  std::int64_t plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0) plus2 += rank2[i];
  }
  const std::int64_t w2 = std::min(plus2, total2 - plus2);

  WilcoxonResult r;
  r.n = n;
  r.statistic = static_cast<double>(w2) / 2.0;
  if (n <= 25) {
    // counts[s] = number of sign patterns whose doubled positive-rank sum is s.
    std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
    counts[0] = 1.0;
    std::int64_t reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::int64_t s = reach; s >= 0; --s) {
        if (counts[s] != 0.0) counts[s + rank2[i]] += counts[s];
      }
      reach += rank2[i];
    }
    double tail = 0.0;
    for (std::int64_t s = 0; s <= w2; ++s) tail += counts[s];
    r.p = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
    r.exact = true;
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (r.statistic - mean + 0.5) / std::sqrt(var);
    r.p = std::min(1.0, std::erfc(-z / std::sqrt(2.0)));
    r.exact = false;
  }
  return r;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd ms;
  if (values.empty()) return ms;
  for (double v : values) ms.mean += v;
  ms.mean /= static_cast<double>(values.size());
  for (double v : values) ms.std += (v - ms.mean) * (v - ms.mean);
  ms.std = std::sqrt(ms.std / static_cast<double>(values.size()));
  return ms;
}

std::string format_mean_std(const MeanStd& ms) {
  return fmt::format("{:.2f} ± {:05.2f}", 100.0 * ms.mean, 100.0 * ms.std);
}

}  // namespace cfspm
