// SPDX-License-Identifier: Apache-2.0
#include "cfspm/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "cfspm/error.hpp"
#include "cfspm/numeric/ops.hpp"
#include "cfspm/numeric/tape.hpp"

namespace cfspm {

void validate(const TrainConfig& c) {
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) throw ValidationError("train: alpha must lie in [0, 1]");
  if (!(c.tau_p > 0.0 && c.tau_p < 1.0)) throw ValidationError("train: tau_p must lie in (0, 1)");
  if (!(c.delta_min >= -1.0 && c.delta_min <= 1.0)) {
    throw ValidationError("train: delta_min must lie in [-1, 1]");
  }
  if (c.stage1_epochs > c.total_epochs()) {
    throw ValidationError("train: stage1_epochs exceeds the total epoch budget");
  }
  if (c.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (!(c.adam.learning_rate > 0.0)) throw ValidationError("train: learning_rate must be positive");
  if (!(c.adam.weight_decay >= 0.0)) throw ValidationError("train: weight_decay must be >= 0");
  if (c.ablations.drop_high_branch && c.ablations.drop_low_branch) {
    throw ValidationError("train: cannot drop both tokenizer branches");
  }
}

ModelConfig apply_ablations(ModelConfig model, const Ablations& a) {
  auto& k = model.tokenizer.kernels;
  if (a.drop_high_branch || a.drop_low_branch) {
    if (k.size() < 2) throw ValidationError("branch ablation needs two tokenizer branches");
    const auto [lo, hi] = std::minmax_element(k.begin(), k.end());
    const std::size_t keep = a.drop_high_branch ? *hi : *lo;
    k = {keep};
  }
  model.frsm.no_context = model.frsm.no_context || a.no_context;
  model.finalize();
  return model;
}

LabelStore::LabelStore(const signal::Cohort& cohort)
    : cohort_(&cohort), reads_(cohort.subjects.size(), 0) {}

const std::vector<std::int64_t>& LabelStore::read(std::size_t subject) {
  if (subject >= reads_.size()) throw ValidationError("label store: subject index out of range");
  if (held_out_ && *held_out_ == subject) {
    throw LeakageError("labels of held-out subject " + cohort_->subjects[subject].id +
                       " were requested during training");
  }
  ++reads_[subject];
  return cohort_->subjects[subject].labels;
}

void LabelStore::hold_out(std::size_t subject) { held_out_ = subject; }
void LabelStore::release() { held_out_.reset(); }

TrainState::TrainState(const TrainConfig& cfg, const ModelParams& p, std::uint64_t fold_seed)
    : params(parameter_list(p)),
      optimizer(cfg.adam, params),
      dropout_seed(fold_seed * 0xD1B54A32D192ED03ULL + 0x5851F42D4C957F2DULL),
      source_rng(fold_seed * 2 + 0x1234567ULL),
      target_rng(fold_seed * 2 + 0x89ABCDEULL) {}

namespace {

Tensor gather(const Tensor& stack, std::span<const std::size_t> rows) {
  const std::size_t per = stack.dim(1) * stack.dim(2);
  std::vector<double> data(rows.size() * per);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(stack.ptr() + rows[i] * per, per, data.begin() + static_cast<std::ptrdiff_t>(i * per));
  }
  return Tensor({rows.size(), stack.dim(1), stack.dim(2)}, std::move(data));
}

Tensor one_hot(std::span<const std::int64_t> labels, std::span<const std::size_t> rows,
               std::size_t classes) {
  Tensor t({rows.size(), classes});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.mutable_data()[i * classes + static_cast<std::size_t>(labels[rows[i]] - 1)] = 1.0;
  }
  return t;
}

std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

void check_source(const ModelConfig& model, const Tensor& source,
                  std::span<const std::int64_t> labels) {
  if (source.rank() != 3 || source.dim(0) == 0) throw ValidationError("train: empty source set");
  if (source.dim(0) != labels.size()) throw ShapeError("train: source trials and labels differ");
  std::vector<bool> seen(model.classes, false);
  for (auto y : labels) {
    if (y < 1 || static_cast<std::size_t>(y) > model.classes) {
      throw ValidationError("train: source label " + std::to_string(y) + " outside 1.." +
                            std::to_string(model.classes));
    }
    seen[static_cast<std::size_t>(y - 1)] = true;
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) throw ValidationError("train: class " + std::to_string(k + 1) + " absent from source");
  }
}

struct TargetBatch {
  Tensor trials;
  Tensor onehot;
  double divisor = 0.0;
};

/// One optimizer step on alpha * L_src + (1 - alpha) * L_tgt; the target
/// term is skipped when it carries no weight or no trial was accepted.
double train_step(const ModelConfig& model, TrainState& st, const ModelParams& params,
                  const Tensor& src, const Tensor& src_onehot, double alpha,
                  const TargetBatch* tgt) {
  for (Tensor& p : st.params) p.zero_grad();
  const std::uint64_t seed = st.dropout_seed + 2 * st.step;
  double value;
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = ops::cross_entropy(model_logits(src, params, model, true, seed), src_onehot);
    if (tgt != nullptr) {
      loss = ops::scale(loss, alpha);
      if (alpha < 1.0 && tgt->trials.numel() > 0) {
        Tensor lt = ops::cross_entropy(model_logits(tgt->trials, params, model, true, seed + 1),
                                       tgt->onehot, tgt->divisor);
        loss = ops::add(loss, ops::scale(lt, 1.0 - alpha));
      }
    }
    value = loss.item();
    tape.backward(loss);
  }
  adam_step(st.params, st.optimizer);
  ++st.step;
  return value;
}

}  // namespace

void train_source_epochs(const ModelConfig& model, const TrainConfig& cfg, TrainState& state,
                         const ModelParams& params, const Tensor& source,
                         std::span<const std::int64_t> labels, std::size_t epochs,
                         std::vector<double>* losses) {
  const std::size_t n = source.dim(0);
  for (std::size_t e = 0; e < epochs; ++e) {
    const auto order = permutation(n, state.source_rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < n; b += cfg.batch_size) {
      const std::span<const std::size_t> rows(order.data() + b, std::min(cfg.batch_size, n - b));
      total += train_step(model, state, params, gather(source, rows),
                          one_hot(labels, rows, model.classes), 1.0, nullptr);
      ++batches;
    }
    if (losses) losses->push_back(total / static_cast<double>(batches));
  }
}

PrototypeMemory stage1_train(const ModelConfig& model, const TrainConfig& cfg, TrainState& state,
                             const ModelParams& params, const Tensor& source,
                             std::span<const std::int64_t> labels,
                             std::span<const PrivateSignature> signatures,
                             std::vector<double>* losses) {
  check_source(model, source, labels);
  if (signatures.size() != labels.size()) throw ShapeError("stage1: signature count mismatch");
  train_source_epochs(model, cfg, state, params, source, labels, cfg.stage1_epochs, losses);
  return build_prototypes(signatures, labels, model.classes, cfg.delta_min);
}

void stage2_adapt(const ModelConfig& model, const TrainConfig& cfg, TrainState& state,
                  const ModelParams& params, const Tensor& source,
                  std::span<const std::int64_t> labels, const Tensor& target,
                  std::span<const PrivateSignature> target_signatures,
                  const PrototypeMemory& memory, Stage2Trace& trace,
                  const std::function<void(PseudoLabelState&)>& after_refresh) {
  check_source(model, source, labels);
  const std::size_t nt = target.dim(0), ns = source.dim(0);
  if (nt == 0) throw ValidationError("stage2: empty target set");
  if (target_signatures.size() != nt) throw ShapeError("stage2: target signature count mismatch");
  const bool consistency = !cfg.ablations.no_sppm;
  const std::size_t first = cfg.stage1_epochs, last = cfg.total_epochs();

  auto refresh = [&](std::size_t epoch) {
    PseudoLabelState s =
        refresh_pseudo_state(params, model, target, target_signatures, memory, cfg.tau_p, consistency);
    if (after_refresh) after_refresh(s);
    for (std::size_t j = 0; j < s.trials.size(); ++j) {
      const auto& g = s.trials[j];
      trace.audit.push_back({epoch, j, g.y_hat, g.r, g.u, g.delta, g.accepted});
    }
    return s;
  };

  PseudoLabelState gate = refresh(first);
  trace.initial = gate;
  for (std::size_t epoch = first; epoch < last; ++epoch) {
    if (epoch > first && !cfg.ablations.no_dynamic_refresh) gate = refresh(epoch);
    trace.accepted.push_back(gate.accepted.size());

    const auto src_order = permutation(ns, state.source_rng);
    const auto tgt_order = permutation(nt, state.target_rng);
    std::size_t cursor = 0;
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < ns; b += cfg.batch_size) {
      const std::span<const std::size_t> rows(src_order.data() + b, std::min(cfg.batch_size, ns - b));
      // Paired target batch, cycling through this epoch's target order.
      const std::size_t tb = std::min(cfg.batch_size, nt);
      std::vector<std::size_t> accepted;
      std::vector<std::int64_t> pseudo;
      for (std::size_t i = 0; i < tb; ++i) {
        const std::size_t j = tgt_order[(cursor + i) % nt];
        if (gate.trials[j].accepted) {
          accepted.push_back(j);
          pseudo.push_back(*gate.trials[j].pseudo);
        }
      }
      cursor = (cursor + tb) % nt;
      TargetBatch tgt;
      if (!accepted.empty()) {
        std::vector<std::size_t> idx(accepted.size());
        std::iota(idx.begin(), idx.end(), 0);
        tgt.trials = gather(target, accepted);
        tgt.onehot = one_hot(pseudo, idx, model.classes);
        tgt.divisor = cfg.normalize_by_accepted ? static_cast<double>(accepted.size())
                                                : static_cast<double>(tb);
      }
      total += train_step(model, state, params, gather(source, rows),
                          one_hot(labels, rows, model.classes), cfg.alpha, &tgt);
      ++batches;
    }
    trace.losses.push_back(total / static_cast<double>(batches));
  }
}

namespace {

std::vector<std::int64_t> argmax_labels(const std::vector<std::vector<double>>& probs) {
  std::vector<std::int64_t> out;
  for (const auto& q : probs) {
    out.push_back(static_cast<std::int64_t>(std::max_element(q.begin(), q.end()) - q.begin()) + 1);
  }
  return out;
}

}  // namespace

FoldResult run_fold(const signal::Cohort& cohort, std::size_t target, const ModelConfig& model,
                    const TrainConfig& cfg, LabelStore& store, const FoldHooks& hooks) {
  validate(cfg);
  validate(model);
  if (cohort.subjects.size() < 2) throw ValidationError("LOSO needs at least two subjects");
  if (target >= cohort.subjects.size()) throw ValidationError("target subject index out of range");
  const auto& tsub = cohort.subjects[target];
  store.hold_out(target);

  std::vector<double> data;
  std::vector<std::int64_t> labels;
  for (std::size_t s = 0; s < cohort.subjects.size(); ++s) {
    if (s == target) continue;
    const auto& sub = cohort.subjects[s];
    data.insert(data.end(), sub.trials.data().begin(), sub.trials.data().end());
    const auto& y = store.read(s);
    labels.insert(labels.end(), y.begin(), y.end());
  }
  const Tensor source({labels.size(), cohort.num_channels(), cohort.num_samples()}, std::move(data));
  const auto source_sigs = extract_signatures(source, cohort.groups);
  const auto target_sigs = extract_signatures(tsub.trials, cohort.groups);

  const std::uint64_t fold_seed = cfg.seed + target;
  FoldResult r;
  r.subject = tsub.id;
  r.subject_index = target;
  r.params = init_model(model, fold_seed);
  TrainState state(cfg, r.params, fold_seed);
  const PrototypeMemory memory =
      stage1_train(model, cfg, state, r.params, source, labels, source_sigs, &r.stage1_losses);

  Stage2Trace trace;
  std::function<void(PseudoLabelState&)> hook;
  if (hooks.after_refresh) {
    hook = [&](PseudoLabelState& s) { hooks.after_refresh(store, target, s); };
  }
  stage2_adapt(model, cfg, state, r.params, source, labels, tsub.trials, target_sigs, memory, trace,
               hook);
  r.stage2_losses = std::move(trace.losses);
  r.accepted_per_epoch = std::move(trace.accepted);
  r.audit = std::move(trace.audit);
  r.predictions = argmax_labels(predict_proba(tsub.trials, r.params, model));

  // Training is over; the held-out labels are used for scoring only.
  store.release();
  const auto& truth = store.read(target);
  r.metrics = compute_metrics(truth, r.predictions, model.classes);
  std::size_t hits = 0, correct = 0;
  for (std::size_t j = 0; j < trace.initial.trials.size(); ++j) {
    const auto& g = trace.initial.trials[j];
    if (g.y_hat == truth[j]) ++correct;
    if (g.accepted && *g.pseudo == truth[j]) ++hits;
  }
  r.stage1_gate.accepted = trace.initial.accepted.size();
  r.stage1_gate.precision =
      r.stage1_gate.accepted ? double(hits) / double(r.stage1_gate.accepted) : 0.0;
  r.stage1_gate.raw_accuracy = double(correct) / double(truth.size());
  return r;
}

LosoResult run_loso(const signal::Cohort& cohort, const ModelConfig& model, const TrainConfig& cfg,
                    std::size_t workers, const FoldHooks& hooks,
                    const std::function<void(const FoldResult&)>& on_fold) {
  validate(cohort);
  validate(cfg);
  validate(model);
  validate(cohort.groups, cohort.num_channels());
  if (cohort.subjects.size() < 2) throw ValidationError("LOSO needs at least two subjects");
  if (cohort.num_channels() != model.tokenizer.channels ||
      cohort.num_samples() != model.tokenizer.samples) {
    throw ValidationError("cohort trials [" + std::to_string(cohort.num_channels()) + ", " +
                          std::to_string(cohort.num_samples()) +
                          "] do not match the model input shape");
  }
  const std::size_t n = cohort.subjects.size();
  LosoResult result;
  result.folds.resize(n);
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;

  auto work = [&] {
    for (std::size_t s = next++; s < n; s = next++) {
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        LabelStore store(cohort);
        FoldResult fold = run_fold(cohort, s, model, cfg, store, hooks);
        std::lock_guard lock(mu);
        if (on_fold) on_fold(fold);
        result.folds[s] = std::move(fold);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(workers, 1, n);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t m = 0; m < std::size(kMetricNames); ++m) {
    std::vector<double> v;
    for (const auto& f : result.folds) v.push_back(metric_value(f.metrics, m));
    result.summary.push_back(mean_std(v));
  }
  return result;
}

}  // namespace cfspm
