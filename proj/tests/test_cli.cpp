// Copyright 2026 The permsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "permsynth/cli.hpp"
#include "permsynth/model_io.hpp"
#include "permsynth/trainer.hpp"

namespace permsynth {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "permsynth");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("permsynth_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small model shared by several tests.
  std::string tiny_model() {
    const CliRun r = cli({"train", "--rows", "2", "--cols", "2", "--hidden", "16", "--iterations",
                       "3", "--set", "batch_episodes=16", "--progress", "0", "--out",
                       path("tiny")});
    EXPECT_EQ(r.code, 0) << r.err;
    return path("tiny/model.psn");
  }

  fs::path dir_;
};

TEST_F(CliTest, OraclePathReversal) {
  const CliRun r = cli({"oracle", "--rows", "1", "--cols", "3", "--perm", "2,1,0"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "3\n");
}

TEST_F(CliTest, OracleCapacityMessage) {
  const CliRun r = cli({"oracle", "--rows", "3", "--cols", "4", "--perm",
                     "1,0,2,3,4,5,6,7,8,9,10,11"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("10"), std::string::npos);
}

TEST_F(CliTest, TrainWritesArtifactsAndCreatesDirectories) {
  const CliRun r = cli({"train", "--rows", "2", "--cols", "2", "--seed", "7", "--iterations", "20",
                     "--hidden", "32,32", "--progress", "0", "--out", path("a/b/c")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("a/b/c/model.psn")));
  EXPECT_TRUE(fs::exists(path("a/b/c/manifest.txt")));
  std::ifstream log(path("a/b/c/train_log.csv"));
  const auto rows = read_training_log(log);
  ASSERT_EQ(rows.size(), 20u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i].difficulty, rows[i - 1].difficulty);

  // The manifest replays the run.
  const CliRun again = cli({"train", "--config", path("a/b/c/manifest.txt"), "--progress", "0",
                         "--out", path("replay")});
  ASSERT_EQ(again.code, 0) << again.err;
  std::ifstream x(path("a/b/c/model.psn"), std::ios::binary), y(path("replay/model.psn"), std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(x), {}),
            std::string(std::istreambuf_iterator<char>(y), {}));
}

TEST_F(CliTest, InvalidRegimeIsUsageError) {
  const CliRun r = cli({"train", "--regime", "sometimes", "--out", path("x")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("regime"), std::string::npos);
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
  EXPECT_EQ(cli({"synth", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(cli({}).code, kExitUsage);
}

TEST_F(CliTest, HelpShowsDefaults) {
  const CliRun r = cli({"train", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("success_reward = 10"), std::string::npos);
  EXPECT_NE(r.out.find("step_penalty = -0.1"), std::string::npos);
  EXPECT_NE(r.out.find("learning_rate = 3e-04"), std::string::npos);
}

TEST_F(CliTest, VersionPrintsFormats) {
  const CliRun r = cli({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("model format 1"), std::string::npos);
}

TEST_F(CliTest, SynthIdentityIsEmptyCircuit) {
  const std::string model = tiny_model();
  const CliRun r = cli({"synth", "--model", model, "--perm", "0,1,2,3"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "circuit v1 2 2 0 0\n");
}

TEST_F(CliTest, SynthGreedyAttemptsWarning) {
  const std::string model = tiny_model();
  const CliRun r = cli({"synth", "--model", model, "--perm", "1,0,2,3", "--mode", "greedy",
                     "--attempts", "5"});
  EXPECT_NE(r.err.find("greedy"), std::string::npos);
  EXPECT_TRUE(r.code == 0 || r.code == kExitSynthesis);
}

TEST_F(CliTest, SynthValidationErrors) {
  const std::string model = tiny_model();
  std::ofstream(path("two.topo")) << "topology v1 2 2\nn 0 0\nn 0 1\n";
  const CliRun inactive = cli({"synth", "--model", model, "--topology", path("two.topo"),
                            "--perm", "0,1,3,2"});
  EXPECT_EQ(inactive.code, kExitValidation);
  const CliRun size = cli({"synth", "--model", model, "--perm", "0,1,2"});
  EXPECT_EQ(size.code, kExitValidation);
  const CliRun missing = cli({"synth", "--model", path("nope.psn"), "--perm", "0,1,2,3"});
  EXPECT_EQ(missing.code, kExitUsage);
}

TEST_F(CliTest, SynthWritesCircuitAndManifest) {
  const std::string model = tiny_model();
  const CliRun r = cli({"synth", "--model", model, "--perm", "1,0,2,3", "--step-cap", "200",
                     "--out", path("c/out.circuit")});
  if (r.code == kExitSynthesis) GTEST_SKIP() << "untrained model missed the cap";
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("c/out.circuit")));
  EXPECT_TRUE(fs::exists(path("c/out.circuit.manifest")));
}

TEST_F(CliTest, TokenSwapMoreTrialsNeverWorse) {
  auto gates = [](const std::string& out) {
    std::istringstream in(out);
    std::string tag, version;
    int rows, cols, g;
    in >> tag >> version >> rows >> cols >> g;
    return g;
  };
  const std::vector<std::string> base = {"tokenswap", "--rows", "3", "--cols", "3", "--perm",
                                         "8,7,6,5,4,3,2,1,0", "--seed", "3"};
  auto one = base, many = base;
  one.insert(one.end(), {"--trials", "1"});
  many.insert(many.end(), {"--trials", "1000"});
  const CliRun a = cli(one), b = cli(many);
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_LE(gates(b.out), gates(a.out));
}

TEST_F(CliTest, InspectReportsAnalyticParameterCount) {
  const std::string model = tiny_model();
  const CliRun r = cli({"inspect", model});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::size_t expect = NetShape{2, 2, {16}}.parameter_count();
  EXPECT_NE(r.out.find("parameters: " + std::to_string(expect) + "\n"), std::string::npos);
  EXPECT_NE(r.out.find("parameters_expected: " + std::to_string(expect)), std::string::npos);
  EXPECT_NE(r.out.find("file_bytes: " + std::to_string(fs::file_size(model))), std::string::npos);
}

TEST_F(CliTest, CorruptModelRejected) {
  const std::string model = tiny_model();
  {
    std::fstream f(model, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-12, std::ios::end);
    f.put('\x7f');
  }
  const CliRun r = cli({"inspect", model});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("checksum"), std::string::npos);
}

TEST_F(CliTest, FinetuneForcedTopology) {
  const std::string model = tiny_model();
  const CliRun r = cli({"finetune", "--model", model, "--force-topology", "4qO", "--force-prob",
                     "0.5", "--iterations", "2", "--set", "batch_episodes=16", "--progress", "0",
                     "--out", path("ft")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("ft/model.psn")));
  std::ifstream manifest(path("ft/manifest.txt"));
  const TrainConfig cfg = read_train_config(manifest);
  EXPECT_EQ(cfg.regime, TopologyRegime::ForcedMix);
  EXPECT_EQ(cfg.force_prob, 0.5);
}

TEST_F(CliTest, BenchIsReproducibleWithoutTiming) {
  const std::vector<std::string> args = {"bench", "--topology", "4qO", "--topology", "7qL",
                                         "--instances", "10", "--methods", "tokenswap,oracle",
                                         "--trials", "10", "--no-timing", "--seed", "5"};
  auto a = args, b = args;
  a.insert(a.end(), {"--out", path("b1")});
  b.insert(b.end(), {"--out", path("b2"), "--threads", "2"});
  ASSERT_EQ(cli(a).code, 0);
  ASSERT_EQ(cli(b).code, 0);
  std::ifstream x(path("b1/records.csv")), y(path("b2/records.csv"));
  const std::string sx(std::istreambuf_iterator<char>(x), {});
  EXPECT_EQ(sx, std::string(std::istreambuf_iterator<char>(y), {}));
  EXPECT_EQ(std::count(sx.begin(), sx.end(), '\n'), 1 + 2 * 10 * 2);
}

TEST_F(CliTest, OutputDirFromEnvironment) {
  setenv(kOutDirEnv, path("env").c_str(), 1);
  const CliRun r = cli({"bench", "--topology", "4qO", "--instances", "2", "--methods", "tokenswap",
                     "--trials", "2", "--no-timing"});
  unsetenv(kOutDirEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("env/bench/records.csv")));
  EXPECT_TRUE(fs::exists(path("env/bench/manifest.txt")));
}

}  // namespace
}  // namespace permsynth
