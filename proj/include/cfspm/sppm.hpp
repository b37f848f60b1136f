// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfspm/model.hpp"
#include "cfspm/signal/cohort.hpp"

namespace cfspm {

using signal::ChannelGroups;

void validate(const ChannelGroups& groups, std::size_t channels);

/// Unit-norm [a_left, a_right, |a_left - a_right|].
struct PrivateSignature {
  std::vector<double> rho;
  bool degenerate = false;  // raw norm below 1e-12; rho is uniform
};

/// Receives "degenerate signal" warnings; the default prints to stderr.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);

/// x: [C, T]. a_q is the group mean of each channel's time-mean square.
PrivateSignature extract_signature(const Tensor& x, const ChannelGroups& groups);

/// All trials of a [n, C, T] stack.
std::vector<PrivateSignature> extract_signatures(const Tensor& stack, const ChannelGroups& groups);

struct Prototype {
  std::vector<double> centroid;  // unit norm
  double mu = 0.0;    // mean cosine of members to the centroid
  double sigma = 0.0; // population std of those cosines
  double delta = 0.0; // max(delta_min, mu - sigma)
};

struct PrototypeMemory {
  std::vector<Prototype> classes;  // index k-1 for label k
  double delta_min = 0.5;
};

/// labels are 1..K; every class must be present.
PrototypeMemory build_prototypes(std::span<const PrivateSignature> signatures,
                                 std::span<const std::int64_t> labels, std::size_t classes,
                                 double delta_min = 0.5);

double cosine(std::span<const double> a, std::span<const double> b);

struct TrialGate {
  std::vector<double> q;
  int y_hat = 0;  // 1..K, ties to the lowest class
  double r = 0.0;
  double u = 0.0;
  double delta = 0.0;  // delta_{y_hat}
  bool accepted = false;
  std::optional<int> pseudo;
};

struct PseudoLabelState {
  std::vector<TrialGate> trials;
  std::vector<std::size_t> accepted;  // A_t, ascending
};

/// Confidence test r >= tau_p, and consistency test u >= delta_{y_hat}
/// unless `consistency` is false.
PseudoLabelState gate_pseudo_labels(std::span<const std::vector<double>> probs,
                                    std::span<const PrivateSignature> signatures,
                                    const PrototypeMemory& memory, double tau_p,
                                    bool consistency = true);

/// Eval-mode class probabilities for a [n, C, T] stack, in chunks.
std::vector<std::vector<double>> predict_proba(const Tensor& stack, const ModelParams& params,
                                               const ModelConfig& cfg, std::size_t chunk = 32);

/// Recomputes q_j with the current model and gates against the frozen memory.
PseudoLabelState refresh_pseudo_state(const ModelParams& params, const ModelConfig& cfg,
                                      const Tensor& target,
                                      std::span<const PrivateSignature> signatures,
                                      const PrototypeMemory& memory, double tau_p,
                                      bool consistency = true);

}  // namespace cfspm
