// SPDX-License-Identifier: Apache-2.0
#include "cfspm/profile.hpp"

#include <cstdlib>

#include "cfspm/error.hpp"

namespace cfspm {

RunConfig profile_by_name(const std::string& name) {
  RunConfig c;
  c.profile = name;
  if (name == "xw") {
    c.model.tokenizer.channels = 30;
    c.model.tokenizer.samples = 1000;
    c.model.tokenizer.embed = 30;
    c.model.frsm.spectral_ratio = 0.45;
    c.train.alpha = 0.98;
    c.train.stage1_epochs = 25;
  } else if (name == "s2019") {
    c.model.tokenizer.channels = 63;
    c.model.tokenizer.samples = 1708;
    c.model.tokenizer.embed = 38;
    c.model.frsm.spectral_ratio = 0.5;
    c.train.alpha = 0.95;
    c.train.stage1_epochs = 10;
  } else {
    throw ValidationError("profile: unknown profile '" + name + "' (expected xw or s2019)");
  }
  c.model.tokenizer.filters = 8;
  c.model.depth = 2;
  c.model.frsm.sparsity = 0.01;
  c.train.tau_p = 0.6;
  c.model.finalize();
  return c;
}

namespace {

template <typename T>
void take(const nlohmann::json& v, const std::string& where, T& out) {
  try {
    out = v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("config: field '" + where + "' has the wrong type");
  }
}

void merge_model(ModelConfig& m, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: 'model' must be an object");
  auto& t = m.tokenizer;
  auto& f = m.frsm;
  for (const auto& [key, v] : j.items()) {
    const std::string w = "model." + key;
    if (key == "channels") take(v, w, t.channels);
    else if (key == "samples") take(v, w, t.samples);
    else if (key == "kernels") take(v, w, t.kernels);
    else if (key == "filters") take(v, w, t.filters);
    else if (key == "pool_window") take(v, w, t.pool_window);
    else if (key == "pool_stride") take(v, w, t.pool_stride);
    else if (key == "embed") take(v, w, t.embed);
    else if (key == "activation") {
      std::string a;
      take(v, w, a);
      if (a == "elu") t.activation = Activation::kElu;
      else if (a == "identity") t.activation = Activation::kIdentity;
      else throw ValidationError("config: field 'model.activation' must be elu or identity");
    } else if (key == "depth") take(v, w, m.depth);
    else if (key == "classes") take(v, w, m.classes);
    else if (key == "expand") take(v, w, f.expand);
    else if (key == "state") take(v, w, f.state);
    else if (key == "dt_rank") take(v, w, f.dt_rank);
    else if (key == "spectral_ratio") take(v, w, f.spectral_ratio);
    else if (key == "sparsity") take(v, w, f.sparsity);
    else if (key == "dropout") take(v, w, f.dropout);
    else if (key == "per_bin_mixer") take(v, w, f.per_bin_mixer);
    else throw ValidationError("config: unknown field '" + w + "'");
  }
  m.finalize();
}

void merge_train(TrainConfig& t, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: 'train' must be an object");
  for (const auto& [key, v] : j.items()) {
    const std::string w = "train." + key;
    if (key == "alpha") take(v, w, t.alpha);
    else if (key == "tau_p") take(v, w, t.tau_p);
    else if (key == "delta_min") take(v, w, t.delta_min);
    else if (key == "stage1_epochs") take(v, w, t.stage1_epochs);
    else if (key == "epochs") take(v, w, t.epochs);
    else if (key == "batch_size") take(v, w, t.batch_size);
    else if (key == "learning_rate") take(v, w, t.adam.learning_rate);
    else if (key == "weight_decay") take(v, w, t.adam.weight_decay);
    else if (key == "beta1") take(v, w, t.adam.beta1);
    else if (key == "beta2") take(v, w, t.adam.beta2);
    else if (key == "eps") take(v, w, t.adam.eps);
    else if (key == "seed") take(v, w, t.seed);
    else if (key == "normalize_by_accepted") take(v, w, t.normalize_by_accepted);
    else throw ValidationError("config: unknown field '" + w + "'");
  }
}

void merge_ablations(Ablations& a, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: 'ablations' must be an object");
  for (const auto& [key, v] : j.items()) {
    const std::string w = "ablations." + key;
    if (key == "no_sppm") take(v, w, a.no_sppm);
    else if (key == "no_dynamic_refresh") take(v, w, a.no_dynamic_refresh);
    else if (key == "no_context") take(v, w, a.no_context);
    else if (key == "drop_high_branch") take(v, w, a.drop_high_branch);
    else if (key == "drop_low_branch") take(v, w, a.drop_low_branch);
    else throw ValidationError("config: unknown field '" + w + "'");
  }
}

}  // namespace

void merge_json(RunConfig& base, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: document must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "profile" || key == "data") continue;
    if (key == "model") merge_model(base.model, v);
    else if (key == "train") merge_train(base.train, v);
    else if (key == "ablations") merge_ablations(base.train.ablations, v);
    else throw ValidationError("config: unknown field '" + key + "'");
  }
}

nlohmann::json to_json(const RunConfig& c) {
  const auto& t = c.model.tokenizer;
  const auto& f = c.model.frsm;
  const auto& r = c.train;
  const auto& a = r.ablations;
  return {
      {"profile", c.profile},
      {"model",
       {{"channels", t.channels},
        {"samples", t.samples},
        {"kernels", t.kernels},
        {"filters", t.filters},
        {"pool_window", t.pool_window},
        {"pool_stride", t.pool_stride},
        {"embed", t.embed},
        {"activation", t.activation == Activation::kElu ? "elu" : "identity"},
        {"depth", c.model.depth},
        {"classes", c.model.classes},
        {"expand", f.expand},
        {"state", f.state},
        {"dt_rank", f.dt_rank},
        {"spectral_ratio", f.spectral_ratio},
        {"sparsity", f.sparsity},
        {"dropout", f.dropout},
        {"per_bin_mixer", f.per_bin_mixer}}},
      {"train",
       {{"alpha", r.alpha},
        {"tau_p", r.tau_p},
        {"delta_min", r.delta_min},
        {"stage1_epochs", r.stage1_epochs},
        {"epochs", r.epochs},
        {"batch_size", r.batch_size},
        {"learning_rate", r.adam.learning_rate},
        {"weight_decay", r.adam.weight_decay},
        {"beta1", r.adam.beta1},
        {"beta2", r.adam.beta2},
        {"eps", r.adam.eps},
        {"seed", r.seed},
        {"normalize_by_accepted", r.normalize_by_accepted}}},
      {"ablations",
       {{"no_sppm", a.no_sppm},
        {"no_dynamic_refresh", a.no_dynamic_refresh},
        {"no_context", a.no_context},
        {"drop_high_branch", a.drop_high_branch},
        {"drop_low_branch", a.drop_low_branch}}}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: document must be a JSON object");
  RunConfig c = profile_by_name(j.value("profile", std::string("xw")));
  merge_json(c, j);
  return c;
}

void validate(const RunConfig& c) {
  validate(c.train);
  validate(c.model);
  validate(c.effective_model());
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("CFSPM_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0' || s[0] == '-') {
    throw ValidationError(std::string("CFSPM_SEED is not a non-negative integer: ") + s);
  }
  return static_cast<std::uint64_t>(v);
}

}  // namespace cfspm
