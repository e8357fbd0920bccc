/* Copyright 2026 The IMCE Emulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "imce/cli/tensor_bundle.h"
#include "imce/cli/toolchain.h"
#include "imce/errors.h"
#include "imce/ir/model_io.h"
#include "imce/mapper/hw_info.h"
#include "imce/zoo/models.h"

namespace imce {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("imce_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    save_model(resnet8_raw(1), dir_ / "model.json");
    save_hw_info(uniform_hw(4, 2, 4, 8), dir_ / "hw.json");
  }
  void TearDown() override { fs::remove_all(dir_); }

  int compile(const fs::path &model, const fs::path &out, bool strict = false) {
    CompileArgs a;
    a.model = model;
    a.out_dir = out;
    a.strict_ranges = strict;
    a.seed = 3;
    return cmd_compile(a, out_, err_);
  }
  int map(const fs::path &compiled, const fs::path &hw, const fs::path &out) {
    MapArgs a;
    a.compiled_dir = compiled;
    a.hw_info = hw;
    a.out_dir = out;
    a.strategy = "mincut";
    return cmd_map(a, out_, err_);
  }
  RunArgs run_args(const fs::path &out, const std::string &noise = {}) {
    RunArgs a;
    a.deploy_dir = dir_ / "deploy";
    a.synthetic = "uniform:6";
    a.out_dir = out;
    a.window = 3;
    a.noise = noise;
    a.worker = IMCE_WORKER_PATH;
    a.seed = 5;
    return a;
  }
  void deploy() {
    ASSERT_EQ(compile(dir_ / "model.json", dir_ / "compiled"), kExitOk) << err_.str();
    ASSERT_EQ(map(dir_ / "compiled", dir_ / "hw.json", dir_ / "deploy"), kExitOk) << err_.str();
  }
  static std::string slurp(const fs::path &p) {
    auto b = read_file(p);
    return {b.begin(), b.end()};
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, CompileReportsPassCounts) {
  ASSERT_EQ(compile(dir_ / "model.json", dir_ / "c"), kExitOk) << err_.str();
  for (const char *f : {"compiled.json", "compiled.bin", "fpga_info.json", "adjacency.json",
                        "compile_report.json"})
    EXPECT_TRUE(fs::exists(dir_ / "c" / f)) << f;
  auto rep = read_json(dir_ / "c" / "compile_report.json");
  EXPECT_EQ(rep.at("input_nodes").get<int>(), 22);
  EXPECT_EQ(rep.at("after_optimize").get<int>(), 21);
  EXPECT_EQ(rep.at("after_fuse").get<int>(), 14);
  EXPECT_EQ(rep.at("an_nodes").get<int>(), 11);
  EXPECT_EQ(rep.at("di_nodes").get<int>(), 3);
}

TEST_F(CliTest, RunMatchesOracleAndIsDeterministic) {
  deploy();
  ASSERT_EQ(cmd_run(run_args(dir_ / "r1"), out_, err_), kExitOk) << err_.str();
  ASSERT_EQ(cmd_run(run_args(dir_ / "r2"), out_, err_), kExitOk) << err_.str();
  EXPECT_EQ(slurp(dir_ / "r1" / "outputs.bin"), slurp(dir_ / "r2" / "outputs.bin"));
  EXPECT_EQ(slurp(dir_ / "r1" / "report.json"), slurp(dir_ / "r2" / "report.json"));

  OracleArgs o;
  o.model = dir_ / "compiled";
  o.synthetic = "uniform:6";
  o.out = dir_ / "oracle.json";
  o.seed = 5;
  ASSERT_EQ(cmd_oracle(o, out_, err_), kExitOk) << err_.str();
  auto a = load_tensor_set(dir_ / "r1" / "outputs.json");
  auto b = load_tensor_set(dir_ / "oracle.json");
  ASSERT_EQ(a.samples.size(), 6u);
  EXPECT_EQ(a.samples, b.samples);

  auto report = read_json(dir_ / "r1" / "report.json");
  EXPECT_EQ(report.at("completed").get<int>(), 6);
  EXPECT_EQ(report.at("window").get<int>(), 3);
  EXPECT_TRUE(report.contains("prototype_reference"));
  EXPECT_FALSE(report.contains("error"));

  StatsArgs s;
  s.dir = dir_ / "r1";
  std::ostringstream so;
  EXPECT_EQ(cmd_stats(s, so, err_), kExitOk);
  EXPECT_FALSE(so.str().empty());
}

TEST_F(CliTest, ZeroSigmaNoiseIsIdentity) {
  deploy();
  ASSERT_EQ(cmd_run(run_args(dir_ / "clean"), out_, err_), kExitOk) << err_.str();
  ASSERT_EQ(cmd_run(run_args(dir_ / "zero", "sigma_prog=0"), out_, err_), kExitOk)
      << err_.str();
  ASSERT_EQ(cmd_run(run_args(dir_ / "noisy", "sigma_prog=0.1"), out_, err_), kExitOk)
      << err_.str();
  EXPECT_EQ(slurp(dir_ / "clean" / "outputs.bin"), slurp(dir_ / "zero" / "outputs.bin"));
  EXPECT_NE(slurp(dir_ / "clean" / "outputs.bin"), slurp(dir_ / "noisy" / "outputs.bin"));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(compile(dir_ / "missing.json", dir_ / "x"), kExitInvalid);
  write_text(dir_ / "broken.json", "{\"nodes\": [}");
  EXPECT_EQ(compile(dir_ / "broken.json", dir_ / "x"), kExitInvalid);

  GraphBuilder gb("zero", 1);
  gb.output(gb.mvm(gb.input("x", {1, 16}), 16, true, "fc"));
  auto g = gb.build();
  g.initializers.at("fc.w") =
      TensorValue::fp32("fc.w", {16, 16}, std::vector<float>(256, 0.0f));
  save_model(g, dir_ / "zero.json");
  EXPECT_EQ(compile(dir_ / "zero.json", dir_ / "z", true), kExitQuantization);
  EXPECT_EQ(compile(dir_ / "zero.json", dir_ / "z", false), kExitOk);

  ASSERT_EQ(compile(dir_ / "model.json", dir_ / "compiled"), kExitOk);
  save_hw_info(uniform_hw(2, 1, 2, 8), dir_ / "small.json");
  EXPECT_EQ(map(dir_ / "compiled", dir_ / "small.json", dir_ / "d"), kExitMapping);
  EXPECT_NE(err_.str().find("shortfall"), std::string::npos);

  ASSERT_EQ(map(dir_ / "compiled", dir_ / "hw.json", dir_ / "deploy"), kExitOk);
  auto a = run_args(dir_ / "fail");
  a.worker = dir_ / "no-such-worker";
  EXPECT_EQ(cmd_run(a, out_, err_), kExitDistributed);
  EXPECT_TRUE(fs::exists(dir_ / "fail" / "report.json"));
  EXPECT_TRUE(read_json(dir_ / "fail" / "report.json").contains("error"));
}

TEST_F(CliTest, BinaryExitStatus) {
  auto status = [](const std::string &cmd) {
    const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  const std::string cli = IMCE_CLI_PATH;
  EXPECT_EQ(status(cli + " compile " + (dir_ / "missing.json").string() + " -o " +
                   (dir_ / "x").string()),
            kExitInvalid);
  EXPECT_EQ(status(cli + " compile " + (dir_ / "model.json").string() + " -o " +
                   (dir_ / "ok").string()),
            kExitOk);
  EXPECT_NE(status(cli), kExitOk);
}

TEST(ParseNoise, KindsFollowGivenSigmas) {
  EXPECT_EQ(parse_noise("", 1).kind, NoiseModel::Kind::None);
  EXPECT_EQ(parse_noise("none", 1).kind, NoiseModel::Kind::None);
  auto p = parse_noise("sigma_prog=0.05", 4);
  EXPECT_EQ(p.kind, NoiseModel::Kind::GaussianProgramming);
  EXPECT_DOUBLE_EQ(p.sigma_prog, 0.05);
  EXPECT_EQ(p.seed, 4u);
  EXPECT_EQ(parse_noise("sigma_read=0.01", 1).kind, NoiseModel::Kind::GaussianRead);
  EXPECT_EQ(parse_noise("sigma_prog=0.01,sigma_read=0.01", 1).kind,
            NoiseModel::Kind::Combined);
  EXPECT_EQ(parse_noise("sigma_prog=0.05,seed=9", 1).seed, 9u);
  EXPECT_THROW(parse_noise("sigma_prog=abc", 1), ConfigError);
  EXPECT_THROW(parse_noise("bogus=1", 1), ConfigError);
  EXPECT_THROW(parse_noise("sigma_prog=-0.1", 1), ConfigError);
}

TEST(TensorSets, SaveLoadRoundTrip) {
  auto dir = fs::temp_directory_path() / ("imce_ts_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  TensorSet s;
  s.samples.push_back({TensorValue::fp32("x", {1, 3}, {1.f, 2.f, 3.f}),
                       TensorValue::int8("y", {2}, {-1, 5})});
  s.samples.push_back({TensorValue::fp32("x", {1, 3}, {4.f, 5.f, 6.f}),
                       TensorValue::int8("y", {2}, {7, -127})});
  s.labels = {3, 9};
  save_tensor_set(s, dir / "set.json");
  auto t = load_tensor_set(dir / "set.json");
  EXPECT_EQ(t.samples, s.samples);
  EXPECT_EQ(t.labels, s.labels);
  EXPECT_THROW(load_tensor_set(dir / "absent.json"), IOError);
  fs::remove_all(dir);
}

} // namespace
} // namespace imce
