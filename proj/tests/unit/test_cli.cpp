// Copyright 2026 The mdphd Authors
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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "mdphd/data.hpp"
#include "mdphd/training.hpp"
#include "oracles.hpp"

namespace mdphd {
namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run(const std::string& args, const std::filesystem::path& dir) {
  const auto log = dir / "cli_output.txt";
  const std::string cmd = std::string(MDPHD_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testing::temp_dir("cli"); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  CliResult cli(const std::string& args) const { return run(args, dir_); }
  std::filesystem::path dir_;
};

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("train --manifest").code, 1);
  const auto missing = cli("train --manifest " + path("nope.jsonl") + " --out " + path("x.ckpt"));
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.output.find("nope.jsonl"), std::string::npos);
}

TEST_F(Cli, DescribePrintsParameterTotals) {
  const auto r = cli("describe --preset 1.5m");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("total parameters"), std::string::npos);
  EXPECT_EQ(cli("describe --preset huge").code, 1);
}

TEST_F(Cli, MixTrainEnhanceEval) {
  const auto corpus = path("corpus");
  auto r = cli("mix --synth-clean 3 --length 20000 --noise highfreq,babble --snr 5 "
               "--test-fraction 0.34 --seed 2 --out " + corpus);
  ASSERT_EQ(r.code, 0) << r.output;
  const auto manifest = data::read_manifest(dir_ / "corpus" / "manifest.jsonl");
  EXPECT_FALSE(manifest.entries.empty());

  r = cli("train --manifest " + corpus + "/manifest.jsonl --preset toy --steps 4 --batch-size 2 "
          "--log-interval 2 --seed 1 --out " + path("m.ckpt"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto ck = training::load_checkpoint(dir_ / "m.ckpt");
  EXPECT_EQ(ck.step, 4u);
  EXPECT_TRUE(std::filesystem::exists(path("m.ckpt.log.csv")));

  // Resuming to a larger step count continues from the checkpoint.
  r = cli("train --manifest " + corpus + "/manifest.jsonl --preset toy --steps 6 --batch-size 2 "
          "--log-interval 2 --seed 1 --resume --out " + path("m.ckpt"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(training::load_checkpoint(dir_ / "m.ckpt").step, 6u);

  std::filesystem::create_directories(dir_ / "in");
  data::write_wav(dir_ / "in" / "a.wav", data::gen_speech_surrogate(5000, 3));
  r = cli("enhance --ckpt " + path("m.ckpt") + " --in " + path("in") + " --out " + path("out"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(data::read_wav(dir_ / "out" / "a.wav").size(), 5000u);

  r = cli("eval --ckpt " + path("m.ckpt") + " --manifest " + corpus + "/manifest.jsonl --out " +
          path("eval.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("noise_kind,input_snr_db,metric,mean,count"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(path("eval.csv")));

  EXPECT_EQ(cli("enhance --ckpt " + path("nope.ckpt") + " --in " + path("in") + " --out " +
                path("out2")).code,
            1);
}

TEST_F(Cli, DivergentTrainingExitsWithTwo) {
  const auto corpus = path("corpus");
  ASSERT_EQ(cli("mix --synth-clean 2 --length 16384 --noise highfreq --snr 0 --out " + corpus).code, 0);
  const auto r = cli("train --manifest " + corpus + "/manifest.jsonl --preset toy --steps 20 "
                     "--batch-size 1 --lr 1e300 --out " + path("d.ckpt"));
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_NE(r.output.find("numeric error"), std::string::npos);
}

TEST_F(Cli, GradcheckOpsPass) {
  const auto r = cli("gradcheck --ops-only --instances 2");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("failed=0"), std::string::npos);
}

}  // namespace
}  // namespace mdphd
