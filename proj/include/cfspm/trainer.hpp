// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cfspm/eval.hpp"
#include "cfspm/model.hpp"
#include "cfspm/numeric/optimizer.hpp"
#include "cfspm/signal/cohort.hpp"
#include "cfspm/sppm.hpp"

namespace cfspm {

struct Ablations {
  bool no_sppm = false;             // confidence-only gate
  bool no_dynamic_refresh = false;  // freeze the Stage-I-end gate
  bool no_context = false;          // S = 0, Bias = 0
  bool drop_high_branch = false;    // remove the short-kernel branch
  bool drop_low_branch = false;     // remove the long-kernel branch
};

inline constexpr std::size_t kMaxEpochs = 200;

struct TrainConfig {
  double alpha = 0.98;
  double tau_p = 0.6;
  double delta_min = 0.5;
  std::size_t stage1_epochs = 25;
  /// Total epochs (Stage I + Stage II), capped at kMaxEpochs.
  std::size_t epochs = kMaxEpochs;
  std::size_t batch_size = 16;
  AdamConfig adam;
  std::uint64_t seed = 0;
  /// Divide the target loss by the accepted count in the batch instead of
  /// the full target batch size.
  bool normalize_by_accepted = false;
  Ablations ablations;

  std::size_t total_epochs() const { return std::min(epochs, kMaxEpochs); }
};

void validate(const TrainConfig& cfg);

/// Applies the architecture switches (context, tokenizer branches).
ModelConfig apply_ablations(ModelConfig model, const Ablations& a);

/// Label access for one cohort. While a subject is held out, reading its
/// labels throws LeakageError. Every read is counted.
class LabelStore {
 public:
  explicit LabelStore(const signal::Cohort& cohort);

  const std::vector<std::int64_t>& read(std::size_t subject);
  void hold_out(std::size_t subject);
  /// Ends the hold-out (evaluation).
  void release();

  std::size_t reads(std::size_t subject) const { return reads_.at(subject); }
  std::optional<std::size_t> held_out() const { return held_out_; }

 private:
  const signal::Cohort* cohort_;
  std::vector<std::size_t> reads_;
  std::optional<std::size_t> held_out_;
};

/// Test seam for deliberate protocol violations.
struct FoldHooks {
  /// Runs after every pseudo-label refresh, before the state is used.
  std::function<void(LabelStore&, std::size_t target, PseudoLabelState&)> after_refresh;
};

struct AuditEntry {
  std::size_t epoch = 0;
  std::size_t trial = 0;
  int y_hat = 0;
  double r = 0.0;
  double u = 0.0;
  double delta_used = 0.0;
  bool accepted = false;
};

/// Quality of the gate at the end of Stage I, scored after training.
struct GateQuality {
  std::size_t accepted = 0;
  double precision = 0.0;     // accepted pseudo-labels matching the truth
  double raw_accuracy = 0.0;  // argmax accuracy on every target trial
};

struct FoldResult {
  std::string subject;
  std::size_t subject_index = 0;
  std::vector<double> stage1_losses;  // per-epoch mean L_src
  std::vector<double> stage2_losses;  // per-epoch mean combined loss
  std::vector<std::size_t> accepted_per_epoch;
  std::vector<std::int64_t> predictions;
  MetricsReport metrics;
  GateQuality stage1_gate;
  std::vector<AuditEntry> audit;
  ModelParams params;
};

/// Optimizer moments, step counter and shuffling streams shared by both
/// stages of one fold.
struct TrainState {
  TrainState(const TrainConfig& cfg, const ModelParams& params, std::uint64_t fold_seed);

  std::vector<Tensor> params;
  OptimizerState optimizer;
  std::uint64_t step = 0;
  std::uint64_t dropout_seed = 0;
  std::mt19937_64 source_rng;
  std::mt19937_64 target_rng;
};

/// Runs `epochs` Stage-I epochs of minibatch cross-entropy on the source
/// stack, appending each epoch's mean loss to `losses`.
void train_source_epochs(const ModelConfig& model, const TrainConfig& cfg, TrainState& state,
                         const ModelParams& params, const Tensor& source,
                         std::span<const std::int64_t> labels, std::size_t epochs,
                         std::vector<double>* losses);

/// Stage I: E_I source epochs, then prototypes from every source signature.
PrototypeMemory stage1_train(const ModelConfig& model, const TrainConfig& cfg, TrainState& state,
                             const ModelParams& params, const Tensor& source,
                             std::span<const std::int64_t> labels,
                             std::span<const PrivateSignature> signatures,
                             std::vector<double>* losses = nullptr);

struct Stage2Trace {
  std::vector<double> losses;
  std::vector<std::size_t> accepted;
  std::vector<AuditEntry> audit;
  PseudoLabelState initial;  // gate at the end of Stage I
};

/// Stage II: total_epochs() - E_I epochs of paired source/target batches
/// on alpha * L_src + (1 - alpha) * L_tgt with gated pseudo-labels.
void stage2_adapt(const ModelConfig& model, const TrainConfig& cfg, TrainState& state,
                  const ModelParams& params, const Tensor& source,
                  std::span<const std::int64_t> labels, const Tensor& target,
                  std::span<const PrivateSignature> target_signatures,
                  const PrototypeMemory& memory, Stage2Trace& trace,
                  const std::function<void(PseudoLabelState&)>& after_refresh = {});

/// One leave-one-subject-out fold.
FoldResult run_fold(const signal::Cohort& cohort, std::size_t target, const ModelConfig& model,
                    const TrainConfig& cfg, LabelStore& store, const FoldHooks& hooks = {});

struct LosoResult {
  std::vector<FoldResult> folds;
  std::vector<MeanStd> summary;  // per kMetricNames entry
};

/// Folds run on up to `workers` threads; results do not depend on it.
/// `on_fold` is called (serialized) as each fold finishes.
LosoResult run_loso(const signal::Cohort& cohort, const ModelConfig& model, const TrainConfig& cfg,
                    std::size_t workers = 1, const FoldHooks& hooks = {},
                    const std::function<void(const FoldResult&)>& on_fold = {});

}  // namespace cfspm
