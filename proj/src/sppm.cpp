// SPDX-License-Identifier: Apache-2.0
#include "cfspm/sppm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <set>

#include "cfspm/error.hpp"
#include "cfspm/numeric/tape.hpp"

namespace cfspm {

namespace {

std::mutex g_sink_mutex;
WarningSink g_sink;

void warn(const std::string& msg) {
  std::lock_guard lock(g_sink_mutex);
  if (g_sink) {
    g_sink(msg);
  } else {
    std::cerr << "warning: " << msg << '\n';
  }
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void set_warning_sink(WarningSink sink) {
  std::lock_guard lock(g_sink_mutex);
  g_sink = std::move(sink);
}

void validate(const ChannelGroups& groups, std::size_t channels) {
  if (groups.left.empty() || groups.right.empty()) {
    throw ValidationError("channel groups must be non-empty");
  }
  std::set<std::size_t> seen;
  for (const auto* g : {&groups.left, &groups.right}) {
    for (std::size_t c : *g) {
      if (c >= channels) {
        throw ValidationError("channel group index " + std::to_string(c) + " exceeds " +
                              std::to_string(channels) + " channels");
      }
      if (!seen.insert(c).second) throw ValidationError("channel groups must be disjoint");
    }
  }
}

PrivateSignature extract_signature(const Tensor& x, const ChannelGroups& groups) {
  if (x.rank() != 2) throw ShapeError("extract_signature expects a [C, T] trial");
  validate(groups, x.dim(0));
  const std::size_t t = x.dim(1);
  auto band_power = [&](const std::vector<std::size_t>& g) {
    double acc = 0.0;
    for (std::size_t c : g) {
      double ss = 0.0;
      const double* row = x.ptr() + c * t;
      for (std::size_t i = 0; i < t; ++i) ss += row[i] * row[i];
      acc += ss / static_cast<double>(t);
    }
    return acc / static_cast<double>(g.size());
  };
  const double a1 = band_power(groups.left);
  const double a2 = band_power(groups.right);
  std::vector<double> raw{a1, a2, std::abs(a1 - a2)};
  const double n = norm2(raw);
  PrivateSignature sig;
  if (n < 1e-12) {
    warn("degenerate signal: sensorimotor band power is zero, using a uniform signature");
    sig.rho.assign(3, 1.0 / std::sqrt(3.0));
    sig.degenerate = true;
    return sig;
  }
  for (double& v : raw) v /= n;
  sig.rho = std::move(raw);
  return sig;
}

std::vector<PrivateSignature> extract_signatures(const Tensor& stack, const ChannelGroups& groups) {
  if (stack.rank() != 3) throw ShapeError("extract_signatures expects [n, C, T]");
  std::vector<PrivateSignature> out;
  out.reserve(stack.dim(0));
  for (std::size_t i = 0; i < stack.dim(0); ++i) {
    out.push_back(extract_signature(signal::trial_at(stack, i), groups));
  }
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  // Rounding can push the quotient of parallel vectors just past 1.
  return std::clamp(dot / (norm2(a) * norm2(b)), -1.0, 1.0);
}

PrototypeMemory build_prototypes(std::span<const PrivateSignature> signatures,
                                 std::span<const std::int64_t> labels, std::size_t classes,
                                 double delta_min) {
  if (signatures.size() != labels.size()) {
    throw ShapeError("build_prototypes: signature and label counts differ");
  }
  if (signatures.empty()) throw ValidationError("build_prototypes: no signatures");
  if (!(delta_min >= -1.0 && delta_min <= 1.0)) {
    throw ValidationError("build_prototypes: delta_min must lie in [-1, 1]");
  }
  const std::size_t dim = signatures.front().rho.size();
  PrototypeMemory mem;
  mem.delta_min = delta_min;
  for (std::size_t k = 1; k <= classes; ++k) {
    std::vector<double> sum(dim, 0.0);
    std::vector<const PrivateSignature*> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 1 || static_cast<std::size_t>(labels[i]) > classes) {
        throw ValidationError("build_prototypes: label " + std::to_string(labels[i]) +
                              " outside 1.." + std::to_string(classes));
      }
      if (static_cast<std::size_t>(labels[i]) != k) continue;
      if (signatures[i].rho.size() != dim) throw ShapeError("build_prototypes: ragged signatures");
      members.push_back(&signatures[i]);
      for (std::size_t d = 0; d < dim; ++d) sum[d] += signatures[i].rho[d];
    }
    if (members.empty()) {
      throw ValidationError("build_prototypes: class " + std::to_string(k) + " has no source trials");
    }
    const double n = norm2(sum);
    if (n < 1e-300) {
      throw NumericError("build_prototypes: class " + std::to_string(k) + " mean has zero norm");
    }
    Prototype p;
    p.centroid = sum;
    for (double& v : p.centroid) v /= n;
    std::vector<double> sims;
    for (const auto* m : members) sims.push_back(cosine(m->rho, p.centroid));
    for (double s : sims) p.mu += s;
    p.mu /= static_cast<double>(sims.size());
    for (double s : sims) p.sigma += (s - p.mu) * (s - p.mu);
    p.sigma = std::sqrt(p.sigma / static_cast<double>(sims.size()));
    p.delta = std::max(delta_min, p.mu - p.sigma);
    mem.classes.push_back(std::move(p));
  }
  return mem;
}

PseudoLabelState gate_pseudo_labels(std::span<const std::vector<double>> probs,
                                    std::span<const PrivateSignature> signatures,
                                    const PrototypeMemory& memory, double tau_p,
                                    bool consistency) {
  if (probs.size() != signatures.size()) {
    throw ShapeError("gate_pseudo_labels: probability and signature counts differ");
  }
  PseudoLabelState state;
  const std::size_t K = memory.classes.size();
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const auto& q = probs[j];
    if (q.size() != K) {
      throw ShapeError("gate_pseudo_labels: " + std::to_string(q.size()) +
                       " class probabilities against " + std::to_string(K) + " prototypes");
    }
    double total = 0.0;
    for (double v : q) total += v;
    if (std::abs(total - 1.0) > 1e-6) {
      throw ValidationError("gate_pseudo_labels: probabilities of trial " + std::to_string(j) +
                            " do not sum to 1");
    }
    TrialGate g;
    g.q = q;
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (q[k] > q[best]) best = k;
    }
    g.y_hat = static_cast<int>(best) + 1;
    g.r = q[best];
    g.u = cosine(signatures[j].rho, memory.classes[best].centroid);
    g.delta = memory.classes[best].delta;
    g.accepted = g.r >= tau_p && (!consistency || g.u >= g.delta);
    if (g.accepted) {
      g.pseudo = g.y_hat;
      state.accepted.push_back(j);
    }
    state.trials.push_back(std::move(g));
  }
  return state;
}

std::vector<std::vector<double>> predict_proba(const Tensor& stack, const ModelParams& params,
                                               const ModelConfig& cfg, std::size_t chunk) {
  if (stack.rank() != 3) throw ShapeError("predict_proba expects [n, C, T]");
  const std::size_t n = stack.dim(0), per = stack.dim(1) * stack.dim(2);
  NoTapeScope no_tape;
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t end = std::min(n, begin + chunk);
    const auto src = stack.data().subspan(begin * per, (end - begin) * per);
    Tensor batch({end - begin, stack.dim(1), stack.dim(2)},
                 std::vector<double>(src.begin(), src.end()));
    const Tensor p = model_forward(batch, params, cfg, false);
    const std::size_t K = p.dim(1);
    for (std::size_t i = 0; i < end - begin; ++i) {
      out.emplace_back(p.data().begin() + static_cast<std::ptrdiff_t>(i * K),
                       p.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * K));
    }
  }
  return out;
}

PseudoLabelState refresh_pseudo_state(const ModelParams& params, const ModelConfig& cfg,
                                      const Tensor& target,
                                      std::span<const PrivateSignature> signatures,
                                      const PrototypeMemory& memory, double tau_p,
                                      bool consistency) {
  const auto probs = predict_proba(target, params, cfg);
  return gate_pseudo_labels(probs, signatures, memory, tau_p, consistency);
}

}  // namespace cfspm
