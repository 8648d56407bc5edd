// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "ngi/cli/commands.hpp"
#include "ngi/io/dataset.hpp"
#include "ngi/io/files.hpp"
#include "ngi/io/pfm.hpp"
#include "ngi/trainer/checkpoint.hpp"
#include "test_util.hpp"

namespace ngi {
namespace {

namespace fs = std::filesystem;

GenDataConfig tiny_data(int frames, std::uint64_t seed = 5) {
  GenDataConfig c;
  c.resolution = 32;
  c.spp = 4;
  c.max_bounces = 2;
  c.frames = frames;
  c.seed = seed;
  c.test_fraction = 0.25;
  return c;
}

const char* kTinyRun = R"({
  "model": {"levels": 2, "base_width": 4, "geometry_width": 4, "heads": 1, "key_dim": 4,
            "disc_width": 4},
  "train": {"batch_size": 2}
})";

std::string slurp(const fs::path& p) { return read_file(p); }

/// Every regular file under `dir`, by relative path.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

class CliFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = test::scratch_dir("cli");
    generate_dataset(tiny_data(8), root_ / "data");
    write_file_atomic(root_ / "run.json", kTinyRun);
    TrainOptions t;
    t.data = root_ / "data";
    t.out = root_ / "run";
    t.config = root_ / "run.json";
    t.epochs = 2;
    cmd_train(t);
  }

  static fs::path root_;
};

fs::path CliFixture::root_;

TEST(GenData, ZeroFramesGivesEmptyValidDataset) {
  const auto dir = test::scratch_dir("cli_empty");
  const auto stats = generate_dataset(tiny_data(0), dir);
  EXPECT_EQ(stats.accepted, 0);
  const Dataset ds = load_dataset(dir / "manifest.json");
  EXPECT_EQ(ds.size(), 0u);
}

TEST(GenData, SameSeedIsByteIdentical) {
  const auto a = test::scratch_dir("cli_seed_a"), b = test::scratch_dir("cli_seed_b");
  const auto stats = generate_dataset(tiny_data(3, 11), a);
  EXPECT_LE(stats.max_recomposition_error, kRecompositionTolerance);
  generate_dataset(tiny_data(3, 11), b);
  EXPECT_EQ(tree(a), tree(b));
  const auto c = test::scratch_dir("cli_seed_c");
  generate_dataset(tiny_data(3, 12), c);
  EXPECT_NE(tree(a), tree(c));
}

TEST(GenData, ThreadCountDoesNotChangeOutput) {
  const auto a = test::scratch_dir("cli_thr_a"), b = test::scratch_dir("cli_thr_b");
  setenv("NGI_THREADS", "1", 1);
  generate_dataset(tiny_data(2, 21), a);
  setenv("NGI_THREADS", "3", 1);
  generate_dataset(tiny_data(2, 21), b);
  unsetenv("NGI_THREADS");
  EXPECT_EQ(tree(a), tree(b));
}

TEST(GenData, AbortsWhenNearlyEveryViewIsRejected) {
  auto cfg = tiny_data(4);
  cfg.filter.min_mean_depth = 1e9;
  try {
    generate_dataset(cfg, test::scratch_dir("cli_reject"));
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("mean depth: 100"), std::string::npos) << what;
  }
}

TEST(GenData, RejectsInvalidConfig) {
  auto cfg = tiny_data(4);
  cfg.spp = 0;
  EXPECT_THROW(generate_dataset(cfg, test::scratch_dir("cli_badcfg")), ConfigError);
  EXPECT_THROW(gen_data_config_from_json(Json{{"frams", 3}}), ConfigError);
  EXPECT_THROW(run_config_from_json(Json{{"model", {{"levels", -1}}}}).model.validate(),
               ConfigError);
}

TEST_F(CliFixture, TrainWritesCheckpointsAndLog) {
  EXPECT_TRUE(fs::exists(root_ / "run" / "model.ckpt"));
  EXPECT_TRUE(fs::exists(root_ / "run" / "best.ckpt"));
  const Json log = Json::parse(slurp(root_ / "run" / "train_log.json"));
  EXPECT_EQ(log["log"].size(), 2u);
  const TrainState s = load_checkpoint(root_ / "run" / "model.ckpt");
  EXPECT_EQ(s.epoch, 2);
  EXPECT_EQ(s.provenance["dataset"], load_dataset(root_ / "data" / "manifest.json").content_hash());
}

TEST_F(CliFixture, ZeroEpochsWritesInitialCheckpoint) {
  TrainOptions t;
  t.data = root_ / "data";
  t.out = root_ / "run0";
  t.config = root_ / "run.json";
  t.epochs = 0;
  cmd_train(t);
  const TrainState s = load_checkpoint(root_ / "run0" / "model.ckpt");
  EXPECT_EQ(s.iteration, 0);
  EXPECT_EQ(s.model.config.height, 32);
}

TEST_F(CliFixture, ResumeMatchesUninterruptedRun) {
  TrainOptions t;
  t.data = root_ / "data";
  t.config = root_ / "run.json";
  t.out = root_ / "half";
  t.epochs = 1;
  cmd_train(t);
  t.out = root_ / "resumed";
  t.resume = root_ / "half" / "model.ckpt";
  t.epochs = 2;
  cmd_train(t);
  EXPECT_EQ(slurp(root_ / "resumed" / "model.ckpt"), slurp(root_ / "run" / "model.ckpt"));
}

TEST_F(CliFixture, InferIsDeterministicAndNonNegative) {
  const Dataset ds = load_dataset(root_ / "data" / "manifest.json");
  const std::string id = ds.entry(0).id;
  InferOptions o{root_ / "run" / "model.ckpt", root_ / "data", id, root_ / "infer_a"};
  const Json doc = cmd_infer(o);
  EXPECT_TRUE(doc["finite"].get<bool>());
  EXPECT_GE(doc["min_L_minus_Ld"].get<double>(), 0.0);

  const Image L = read_pfm(root_ / "infer_a" / (id + "_L.pfm"));
  const Image Ld = ds.load_frame(0).L_d;
  for (std::size_t i = 0; i < L.data.size(); ++i) ASSERT_GE(L.data[i], Ld.data[i]);

  const std::string png = slurp(root_ / "infer_a" / (id + "_preview.png"));
  ASSERT_GE(png.size(), 8u);
  EXPECT_EQ(png.substr(1, 3), "PNG");

  o.out = root_ / "infer_b";
  cmd_infer(o);
  for (const char* suffix : {"_S_ind.pfm", "_L_ind.pfm", "_L.pfm", "_preview.png"}) {
    EXPECT_EQ(slurp(root_ / "infer_a" / (id + suffix)), slurp(root_ / "infer_b" / (id + suffix)))
        << suffix;
  }
}

TEST_F(CliFixture, InferUnknownFrameIsDataError) {
  InferOptions o{root_ / "run" / "model.ckpt", root_ / "data", "nope", root_ / "infer_x"};
  try {
    cmd_infer(o);
    FAIL() << "expected an exception";
  } catch (const std::exception& e) {
    EXPECT_EQ(exit_code_for(e), kExitData) << e.what();
  }
}

TEST_F(CliFixture, InferOnColoredLightIsFiniteAndPositive) {
  auto cfg = tiny_data(2, 31);
  cfg.colored_light_probability = 1.0;
  cfg.test_fraction = 0.5;
  generate_dataset(cfg, root_ / "colored");
  const Dataset ds = load_dataset(root_ / "colored" / "manifest.json");
  for (const auto& f : ds.entries()) {
    const Json doc = cmd_infer({root_ / "run" / "model.ckpt", root_ / "colored", f.id, root_ / "inf_col"});
    EXPECT_TRUE(doc["finite"].get<bool>());
    EXPECT_GE(doc["min_L_minus_Ld"].get<double>(), 0.0);
    const Image s = read_pfm(root_ / "inf_col" / (f.id + "_S_ind.pfm"));
    for (float v : s.data) ASSERT_GT(v, 0.0f);
  }
}

TEST_F(CliFixture, EvalReportsAllRowsDeterministically) {
  EvalOptions o{root_ / "run" / "model.ckpt", root_ / "data", root_ / "eval_a.json", "", 0};
  cmd_eval(o);
  o.report = root_ / "eval_b.json";
  cmd_eval(o);
  EXPECT_EQ(slurp(root_ / "eval_a.json"), slurp(root_ / "eval_b.json"));
  const Json doc = Json::parse(slurp(root_ / "eval_a.json"));
  std::set<std::string> rows;
  for (const auto& m : doc["report"]["methods"]) {
    rows.insert(m["method"].get<std::string>());
    EXPECT_TRUE(std::isfinite(m["mean_psnr"].get<double>()));
  }
  for (const char* r : {"model", "ambient", "direct"}) EXPECT_TRUE(rows.count(r)) << r;
  EXPECT_FALSE(rows.count("model_no_gfa"));
}

TEST_F(CliFixture, EvalNoGfaAblationAddsRow) {
  EvalOptions o{root_ / "run" / "model.ckpt", root_ / "data", root_ / "eval_ab.json", "no-gfa", 0};
  const Json doc = cmd_eval(o);
  bool found = false;
  for (const auto& m : doc["report"]["methods"]) found |= m["method"] == "model_no_gfa";
  EXPECT_TRUE(found);
  o.ablate = "no-gcm";
  EXPECT_THROW(cmd_eval(o), ConfigError);
}

TEST(Gradcheck, SuitePassesInBothPrecisions) {
  GradcheckOptions o;
  o.seeds = 4;
  bool passed = false;
  const Json doc = cmd_gradcheck(o, passed);
  EXPECT_TRUE(passed) << doc.dump(2);
  std::set<std::string> precisions;
  for (const auto& c : doc["cases"]) precisions.insert(c["precision"].get<std::string>());
  EXPECT_EQ(precisions, (std::set<std::string>{"float32", "float64"}));
}

TEST(Gradcheck, InjectedFaultFailsNamingTheOp) {
  GradcheckOptions o;
  o.seeds = 2;
  o.float_mode = false;
  o.inject_fault = "conv2d";
  bool passed = true;
  const Json doc = cmd_gradcheck(o, passed);
  EXPECT_FALSE(passed);
  std::vector<std::string> failed;
  for (const auto& c : doc["cases"]) {
    if (!c["passed"].get<bool>()) failed.push_back(c["name"].get<std::string>());
  }
  EXPECT_EQ(failed, std::vector<std::string>{"conv2d"});
}

// The binary's exit codes, one per failure class.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(NGI_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(CliFixture, ExitCodes) {
  const std::string data = (root_ / "data").string();
  const std::string ckpt = (root_ / "run" / "model.ckpt").string();
  EXPECT_EQ(run_cli("--no-such-flag"), kExitConfig);
  write_file_atomic(root_ / "bad.json", R"({"train": {"epoch": 3}})");
  EXPECT_EQ(run_cli("train --data " + data + " --out " + (root_ / "x").string() + " --config " +
                    (root_ / "bad.json").string()),
            kExitConfig);
  EXPECT_EQ(run_cli("train --data " + (root_ / "missing").string() + " --out " +
                    (root_ / "x").string()),
            kExitData);
  EXPECT_EQ(run_cli("gradcheck --seeds 1 --no-float --inject-fault matmul_batched"), kExitNumerical);
  EXPECT_EQ(run_cli("eval --ckpt " + ckpt + " --data " + data + " --report " +
                    (root_ / "cli_eval.json").string()),
            kExitOk);
}

}  // namespace
}  // namespace ngi
