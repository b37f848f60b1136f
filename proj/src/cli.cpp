// SPDX-License-Identifier: Apache-2.0
#include "cfspm/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cfspm/error.hpp"
#include "cfspm/gradcheck.hpp"
#include "cfspm/numeric/tensor.hpp"
#include "cfspm/profile.hpp"
#include "cfspm/run_dir.hpp"
#include "cfspm/signal/cohort.hpp"
#include "cfspm/signal/synth.hpp"

namespace cfspm {

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

struct RunOptions {
  std::string data;
  std::string out;
  std::string profile = "xw";
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> stage1_epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> alpha;
  std::optional<double> tau_p;
  std::optional<double> learning_rate;
  std::size_t workers = 1;
  Ablations flags;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--data", o.data, "Cohort directory or manifest")->required();
  cmd->add_option("--out", o.out, "Run directory")->required();
  cmd->add_option("--profile", o.profile, "Hyperparameter profile (xw, s2019)");
  cmd->add_option("--config", o.config, "JSON config layered over the profile");
  cmd->add_option("--seed", o.seed, "Base seed (overrides CFSPM_SEED and config)");
  cmd->add_option("--epochs", o.epochs, "Total epoch budget (capped at 200)");
  cmd->add_option("--stage1-epochs", o.stage1_epochs, "Stage-I epochs");
  cmd->add_option("--batch-size", o.batch_size, "Minibatch size");
  cmd->add_option("--alpha", o.alpha, "Source loss weight");
  cmd->add_option("--tau-p", o.tau_p, "Pseudo-label confidence threshold");
  cmd->add_option("--lr", o.learning_rate, "Adam learning rate");
  cmd->add_flag("--no-sppm", o.flags.no_sppm, "Confidence-only pseudo-label gate");
  cmd->add_flag("--no-dynamic-refresh", o.flags.no_dynamic_refresh,
                "Freeze pseudo-labels at the end of Stage I");
  cmd->add_flag("--no-context", o.flags.no_context, "Disable spectral context guidance");
  cmd->add_flag("--drop-high-branch", o.flags.drop_high_branch, "Remove the high-frequency branch");
  cmd->add_flag("--drop-low-branch", o.flags.drop_low_branch, "Remove the low-frequency branch");
}

/// profile < config file < CFSPM_SEED < flags.
RunConfig resolve(const RunOptions& o) {
  RunConfig cfg;
  if (!o.config.empty()) {
    const auto j = read_json(o.config);
    cfg = profile_by_name(j.value("profile", o.profile));
    merge_json(cfg, j);
  } else {
    cfg = profile_by_name(o.profile);
  }
  if (auto s = env_seed()) cfg.train.seed = *s;
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.stage1_epochs) cfg.train.stage1_epochs = *o.stage1_epochs;
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  if (o.alpha) cfg.train.alpha = *o.alpha;
  if (o.tau_p) cfg.train.tau_p = *o.tau_p;
  if (o.learning_rate) cfg.train.adam.learning_rate = *o.learning_rate;
  auto& a = cfg.train.ablations;
  a.no_sppm = a.no_sppm || o.flags.no_sppm;
  a.no_dynamic_refresh = a.no_dynamic_refresh || o.flags.no_dynamic_refresh;
  a.no_context = a.no_context || o.flags.no_context;
  a.drop_high_branch = a.drop_high_branch || o.flags.drop_high_branch;
  a.drop_low_branch = a.drop_low_branch || o.flags.drop_low_branch;
  validate(cfg);
  return cfg;
}

signal::Cohort load_cohort_for(const RunConfig& cfg, const std::string& data) {
  signal::Cohort cohort = signal::read_cohort(data);
  const auto& t = cfg.model.tokenizer;
  if (cohort.num_channels() != t.channels || cohort.num_samples() != t.samples) {
    throw ValidationError(fmt::format(
        "model.channels/model.samples: cohort trials are {}x{}, profile '{}' expects {}x{}",
        cohort.num_channels(), cohort.num_samples(), cfg.profile, t.channels, t.samples));
  }
  if (cohort.num_classes() > cfg.model.classes) {
    throw ValidationError(fmt::format("model.classes: cohort has labels up to {}, model has {}",
                                      cohort.num_classes(), cfg.model.classes));
  }
  return cohort;
}

nlohmann::json echo(const RunConfig& cfg, const std::string& data) {
  auto j = to_json(cfg);
  j["data"] = data;
  return j;
}

void print_summary(std::ostream& out, const LosoResult& r) {
  out << fmt::format("{:<10}", "subject");
  for (const char* m : kMetricNames) out << fmt::format("{:>11}", m);
  out << '\n';
  for (const auto& f : r.folds) {
    out << fmt::format("{:<10}", f.subject);
    for (std::size_t i = 0; i < std::size(kMetricNames); ++i) {
      out << fmt::format("{:>11.4f}", metric_value(f.metrics, i));
    }
    out << '\n';
  }
  for (std::size_t i = 0; i < r.summary.size(); ++i) {
    out << fmt::format("{:<10} {}\n", kMetricNames[i], format_mean_std(r.summary[i]));
  }
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed, std::ostream& out) {
  signal::CohortSpec spec =
      spec_path.empty() ? signal::CohortSpec{} : signal::cohort_spec_from_json(read_json(spec_path));
  if (auto s = env_seed()) spec.seed = *s;
  if (seed) spec.seed = *seed;
  signal::validate(spec);
  const auto raw = signal::synthesize_cohort(spec);
  std::vector<signal::Trial> trials;
  trials.reserve(raw.size());
  for (const auto& r : raw) trials.push_back(signal::preprocess(r));
  const auto cohort = signal::assemble_cohort(trials, signal::channel_names(spec.channels),
                                              {spec.left_group, spec.right_group});
  signal::write_cohort(out_dir, cohort);
  std::ofstream(std::filesystem::path(out_dir) / "cohort_spec.json") << to_json(spec).dump(2) << '\n';
  out << fmt::format("wrote {} subjects x {} trials ({} channels, {} samples at {} Hz) to {}\n",
                     cohort.subjects.size(), spec.trials_per_subject, cohort.num_channels(),
                     cohort.num_samples(), cohort.fs, out_dir);
  return 0;
}

int cmd_loso(const RunOptions& o, const std::string& target, std::ostream& out) {
  const RunConfig cfg = resolve(o);
  const signal::Cohort cohort = load_cohort_for(cfg, o.data);
  const ModelConfig model = cfg.effective_model();
  const auto j = echo(cfg, o.data);
  write_config_echo(o.out, j);
  const auto start = std::chrono::steady_clock::now();

  LosoResult result;
  if (target.empty()) {
    result = run_loso(cohort, model, cfg.train, o.workers, {},
                      [&](const FoldResult& f) {
                        write_fold(o.out, f, j);
                        out << fmt::format("fold {}: accuracy {:.4f}\n", f.subject,
                                           f.metrics.accuracy)
                            << std::flush;
                      });
  } else {
    signal::validate(cohort);
    const std::size_t idx = cohort.subject_index(target);
    LabelStore store(cohort);
    result.folds.push_back(run_fold(cohort, idx, model, cfg.train, store));
    write_fold(o.out, result.folds.back(), j);
    for (std::size_t m = 0; m < std::size(kMetricNames); ++m) {
      const double v = metric_value(result.folds.back().metrics, m);
      result.summary.push_back(mean_std(std::span<const double>(&v, 1)));
    }
  }
  write_summary(o.out, result);
  print_summary(out, result);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << fmt::format("elapsed {:.1f} s\n", secs);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, double step, std::ostream& out) {
  const auto report = run_gradcheck(gradcheck_config(), seed, step);
  for (const auto& p : report.params) {
    out << fmt::format("{:<28} {:>6} {:.3e}\n", p.name, p.numel, p.rel_error);
  }
  const bool ok = report.max_rel_error < 1e-4;
  out << fmt::format("max relative error {:.3e} ({}) in {:.2f} s\n", report.max_rel_error,
                     ok ? "pass" : "FAIL", report.seconds);
  return ok ? 0 : 2;
}

int cmd_report(const std::vector<std::string>& runs, const std::string& json_out,
               std::ostream& out) {
  nlohmann::json doc = nlohmann::json::array();
  std::vector<std::vector<SummaryRow>> all;
  out << fmt::format("{:<24}", "run");
  for (const char* m : kMetricNames) out << fmt::format("{:>16}", m);
  out << fmt::format("{:>10}\n", "accepted");
  for (const auto& run : runs) {
    auto rows = read_summary(run);
    if (rows.empty()) throw ValidationError("run '" + run + "' has an empty summary.csv");
    nlohmann::json entry{{"run", run}};
    out << fmt::format("{:<24}", std::filesystem::path(run).filename().string());
    for (std::size_t m = 0; m < std::size(kMetricNames); ++m) {
      std::vector<double> v;
      for (const auto& r : rows) v.push_back(metric_value(r.metrics, m));
      const auto ms = mean_std(v);
      out << fmt::format("{:>16}", format_mean_std(ms));
      entry[kMetricNames[m]] = {{"mean", ms.mean}, {"std", ms.std}};
    }
    const double acc = final_acceptance_rate(run);
    out << (acc < 0 ? fmt::format("{:>10}", "-") : fmt::format("{:>10.3f}", acc)) << '\n';
    entry["final_acceptance_rate"] = acc;
    doc.push_back(entry);
    all.push_back(std::move(rows));
  }
  nlohmann::json tests = nlohmann::json::array();
  for (std::size_t i = 1; i < runs.size(); ++i) {
    std::vector<double> a, b;
    for (const auto& ra : all[0]) {
      for (const auto& rb : all[i]) {
        if (ra.subject == rb.subject) {
          a.push_back(ra.metrics.accuracy);
          b.push_back(rb.metrics.accuracy);
        }
      }
    }
    std::string line;
    nlohmann::json t{{"a", runs[0]}, {"b", runs[i]}, {"pairs", a.size()}};
    try {
      const auto w = wilcoxon_signed_rank(a, b);
      line = fmt::format("W = {:.1f}, p = {:.4g} ({}, n = {})", w.statistic, w.p,
                         w.exact ? "exact" : "normal approx.", w.n);
      t["statistic"] = w.statistic;
      t["p"] = w.p;
    } catch (const ValidationError& e) {
      line = e.what();
      t["error"] = e.what();
    }
    out << fmt::format("wilcoxon accuracy {} vs {}: {}\n", runs[0], runs[i], line);
    tests.push_back(t);
  }
  if (!json_out.empty()) {
    std::ofstream os(json_out);
    if (!os) throw IoError("cannot write " + json_out);
    os << nlohmann::json{{"runs", doc}, {"wilcoxon", tests}}.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-patient motor-imagery EEG decoding", "cfspm"};
  app.require_subcommand(1);

  std::string spec_path, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Generate and preprocess a synthetic cohort");
  synth->add_option("--spec", spec_path, "Cohort spec JSON (defaults when omitted)");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Generator seed");

  RunOptions train_o, loso_o;
  std::string target;
  auto* train = app.add_subcommand("train", "Run a single fold against --target");
  add_run_options(train, train_o);
  train->add_option("--target", target, "Held-out subject id")->required();
  auto* loso = app.add_subcommand("loso", "Leave-one-subject-out protocol");
  add_run_options(loso, loso_o);
  loso->add_option("--workers", loso_o.workers, "Parallel folds")->check(CLI::PositiveNumber);

  std::uint64_t gc_seed = 0;
  double gc_step = 1e-5;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--seed", gc_seed, "Parameter seed");
  gradcheck->add_option("--step", gc_step, "Central-difference step");

  std::vector<std::string> runs;
  std::string report_json;
  auto* report = app.add_subcommand("report", "Aggregate run directories");
  report->add_option("runs", runs, "Run directories (the first is the reference)")->required();
  report->add_option("--json", report_json, "Also write the report as JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*synth) return cmd_synth(spec_path, synth_out, synth_seed, out);
    if (*train) return cmd_loso(train_o, target, out);
    if (*loso) return cmd_loso(loso_o, "", out);
    if (*gradcheck) return cmd_gradcheck(gc_seed, gc_step, out);
    if (*report) return cmd_report(runs, report_json, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << '\n';
    return 2;
  }
  err << "error: no command given\n";
  return 1;
}

int dispatch(int argc, char** argv) {
  retain_freed_memory();
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace cfspm
