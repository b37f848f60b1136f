// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfspm/cli.hpp"
#include "cfspm/error.hpp"
#include "cfspm/profile.hpp"

namespace cfspm {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  return {std::istreambuf_iterator<char>(is), {}};
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

class CliRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ::unsetenv("CFSPM_SEED");
    root_ = fs::temp_directory_path() / "cfspm_test_cli";
    fs::remove_all(root_);
    fs::create_directories(root_);
    write_file(root_ / "spec.json", R"({"subjects": 3, "trials_per_subject": 4})");
    const Outcome o = run({"synth", "--spec", (root_ / "spec.json").string(), "--out",
                           (root_ / "data").string(), "--seed", "3"});
    ASSERT_EQ(o.code, 0) << o.err;
  }
  void TearDown() override { ::unsetenv("CFSPM_SEED"); }

  static std::vector<std::string> tiny(const std::string& cmd, const fs::path& out) {
    return {cmd,      "--data",          (root_ / "data").string(),
            "--out",  out.string(),      "--epochs",
            "2",      "--stage1-epochs", "1",
            "--batch-size", "4"};
  }

  static nlohmann::json echo(const fs::path& dir) {
    return nlohmann::json::parse(slurp(dir / "config.json"));
  }

  static fs::path root_;
};

fs::path CliRun::root_;

TEST_F(CliRun, SynthWritesCohortAndSpecEcho) {
  EXPECT_TRUE(fs::exists(root_ / "data" / "cohort_spec.json"));
  const auto spec = nlohmann::json::parse(slurp(root_ / "data" / "cohort_spec.json"));
  EXPECT_EQ(spec.at("subjects"), 3);
  EXPECT_EQ(spec.at("seed"), 3);
}

TEST_F(CliRun, LosoWritesOneDirectoryPerFoldAndASummary) {
  const fs::path out = root_ / "loso";
  const Outcome o = run(tiny("loso", out));
  ASSERT_EQ(o.code, 0) << o.err;
  for (const char* s : {"S01", "S02", "S03"}) {
    EXPECT_TRUE(fs::exists(out / (std::string("fold_") + s) / "metrics.json")) << s;
    EXPECT_NE(o.out.find(std::string("fold ") + s + ": accuracy"), std::string::npos);
  }
  EXPECT_NE(o.out.find("elapsed"), std::string::npos);
  const std::string csv = slurp(out / "summary.csv");
  EXPECT_EQ(csv.rfind("subject,accuracy", 0), 0u) << csv;
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const auto j = echo(out);
  EXPECT_EQ(j.at("train").at("epochs"), 2);
  EXPECT_EQ(j.at("train").at("stage1_epochs"), 1);
  EXPECT_EQ(j.at("profile"), "xw");

  const fs::path again = root_ / "loso_again";
  ASSERT_EQ(run(tiny("loso", again)).code, 0);
  EXPECT_EQ(slurp(again / "summary.csv"), csv);

  const Outcome r = run({"report", out.string(), again.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wilcoxon accuracy"), std::string::npos);
}

TEST_F(CliRun, TrainRunsOnlyTheRequestedFold) {
  const fs::path out = root_ / "train";
  auto args = tiny("train", out);
  args.insert(args.end(), {"--target", "S02", "--no-sppm"});
  const Outcome o = run(args);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(fs::exists(out / "fold_S02"));
  EXPECT_FALSE(fs::exists(out / "fold_S01"));
  EXPECT_EQ(echo(out).at("ablations").at("no_sppm"), true);
}

TEST_F(CliRun, SeedPrecedence) {
  write_file(root_ / "seeded.json", R"({"train": {"seed": 11}})");
  auto with_config = [&](const fs::path& out) {
    auto a = tiny("train", out);
    a.insert(a.end(), {"--target", "S01", "--config", (root_ / "seeded.json").string()});
    return a;
  };
  ASSERT_EQ(run(with_config(root_ / "seed_cfg")).code, 0);
  EXPECT_EQ(echo(root_ / "seed_cfg").at("train").at("seed"), 11);

  ::setenv("CFSPM_SEED", "5", 1);
  EXPECT_EQ(env_seed(), 5u);
  ASSERT_EQ(run(with_config(root_ / "seed_env")).code, 0);
  EXPECT_EQ(echo(root_ / "seed_env").at("train").at("seed"), 5);

  auto flagged = with_config(root_ / "seed_flag");
  flagged.insert(flagged.end(), {"--seed", "7"});
  ASSERT_EQ(run(flagged).code, 0);
  EXPECT_EQ(echo(root_ / "seed_flag").at("train").at("seed"), 7);

  ::setenv("CFSPM_SEED", "-3", 1);
  EXPECT_THROW(env_seed(), ValidationError);
  EXPECT_EQ(run(with_config(root_ / "seed_bad")).code, 1);
}

TEST_F(CliRun, InvalidInputExitsWithOne) {
  Outcome o = run({"frobnicate"});
  EXPECT_EQ(o.code, 1);
  EXPECT_EQ(run({}).code, 1);

  o = run({"loso", "--data", (root_ / "data").string()});
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("--out"), std::string::npos) << o.err;

  auto args = tiny("loso", root_ / "bad_alpha");
  args.insert(args.end(), {"--alpha", "2"});
  o = run(args);
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("alpha"), std::string::npos) << o.err;

  write_file(root_ / "unknown.json", R"({"model": {"x": 1}})");
  args = tiny("loso", root_ / "bad_key");
  args.insert(args.end(), {"--config", (root_ / "unknown.json").string()});
  o = run(args);
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("model.x"), std::string::npos) << o.err;

  o = run({"loso", "--data", (root_ / "missing").string(), "--out", (root_ / "m").string()});
  EXPECT_EQ(o.code, 1);

  args = tiny("loso", root_ / "bad_profile");
  args.insert(args.end(), {"--profile", "s2019"});
  o = run(args);
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("model.channels"), std::string::npos) << o.err;

  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, GradcheckPassesAndFailsWithExitCodes) {
  Outcome o = run({"gradcheck"});
  EXPECT_EQ(o.code, 0) << o.out;
  EXPECT_NE(o.out.find("(pass)"), std::string::npos);
  // A unit step makes central differences useless for this model.
  o = run({"gradcheck", "--step", "1"});
  EXPECT_EQ(o.code, 2) << o.out;
  EXPECT_NE(o.out.find("FAIL"), std::string::npos);
}

TEST(Profile, XwValues) {
  const RunConfig c = profile_by_name("xw");
  EXPECT_EQ(c.model.tokenizer.channels, 30u);
  EXPECT_EQ(c.model.tokenizer.samples, 1000u);
  EXPECT_EQ(c.model.tokenizer.embed, 30u);
  EXPECT_EQ(c.model.tokenizer.filters, 8u);
  EXPECT_EQ(c.model.depth, 2u);
  EXPECT_EQ(c.model.frsm.spectral_ratio, 0.45);
  EXPECT_EQ(c.model.frsm.sparsity, 0.01);
  EXPECT_EQ(c.train.alpha, 0.98);
  EXPECT_EQ(c.train.tau_p, 0.6);
  EXPECT_EQ(c.train.stage1_epochs, 25u);
  EXPECT_NO_THROW(validate(c));
}

TEST(Profile, S2019Values) {
  const RunConfig c = profile_by_name("s2019");
  EXPECT_EQ(c.model.tokenizer.channels, 63u);
  EXPECT_EQ(c.model.tokenizer.samples, 1708u);
  EXPECT_EQ(c.model.tokenizer.embed, 38u);
  EXPECT_EQ(c.model.frsm.spectral_ratio, 0.5);
  EXPECT_EQ(c.train.alpha, 0.95);
  EXPECT_EQ(c.train.stage1_epochs, 10u);
  EXPECT_NO_THROW(validate(c));
  EXPECT_THROW(profile_by_name("bci4"), ValidationError);
}

TEST(Profile, JsonRoundTrip) {
  RunConfig c = profile_by_name("s2019");
  c.train.seed = 42;
  c.train.ablations.no_context = true;
  c.train.adam.learning_rate = 3e-4;
  const RunConfig back = run_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.profile, "s2019");
  EXPECT_EQ(back.train.seed, 42u);
  EXPECT_TRUE(back.effective_model().frsm.no_context);

  RunConfig base = profile_by_name("xw");
  merge_json(base, nlohmann::json::parse(R"({"train": {"alpha": 0.9}})"));
  EXPECT_EQ(base.train.alpha, 0.9);
  EXPECT_EQ(base.train.tau_p, 0.6);
  EXPECT_THROW(merge_json(base, nlohmann::json::parse(R"({"train": {"alpha": "x"}})")),
               ValidationError);
  EXPECT_THROW(merge_json(base, nlohmann::json::parse(R"({"extra": 1})")), ValidationError);
}

}  // namespace
}  // namespace cfspm
