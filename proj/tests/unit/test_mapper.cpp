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

#include <filesystem>
#include <random>
#include <unistd.h>

#include <gtest/gtest.h>

#include "imce/compiler/passes.h"
#include "imce/errors.h"
#include "imce/ir/model_io.h"
#include "imce/mapper/configs.h"
#include "imce/mapper/mapper.h"
#include "imce/zoo/models.h"
#include "oracles.h"

namespace imce {
namespace {

namespace fs = std::filesystem;

CompiledModel compiled(const ModelGraph &g) {
  std::mt19937_64 rng(1);
  CalibrationSet cal;
  for (int s = 0; s < 2; ++s) {
    std::vector<TensorValue> sample;
    for (const auto &in : g.graph_inputs) {
      std::vector<float> v(static_cast<size_t>(num_elements(in.shape)));
      for (auto &x : v)
        x = static_cast<float>(2 * uniform01(rng) - 1);
      sample.push_back(TensorValue::fp32(in.name, in.shape, v));
    }
    cal.samples.push_back(sample);
  }
  return compile(g, cal);
}

const CompiledModel &resnet8_cm() {
  static const CompiledModel cm = compiled(resnet8(1));
  return cm;
}

TEST(HwInfo, ValidationAndRoundTrip) {
  auto hw = uniform_hw(3, 2, 2, 4);
  EXPECT_EQ(hw.boards.size(), 5u);
  EXPECT_EQ(hw.boards[3].accel, AccelClass::Di);
  EXPECT_EQ(hw_info_from_json(hw_info_to_json(hw)), hw);
  auto dup = hw;
  dup.boards[1].id = 0;
  EXPECT_THROW(validate(dup), ConfigError);
  auto zero = hw;
  zero.boards[0].max_sthreads = 0;
  EXPECT_THROW(validate(zero), ConfigError);
}

TEST(Mapper, TrivialInstanceOneNodePerBoard) {
  const auto &cm = resnet8_cm();
  auto hw = uniform_hw(11, 3, 1, 8);
  for (auto s : {Strategy::LoadBalance, Strategy::MinCut, Strategy::RoundRobin}) {
    auto plan = map_nodes(cm, hw, s);
    EXPECT_TRUE(check_plan(plan, cm, hw).empty()) << to_string(s);
    EXPECT_EQ(plan.assignment.size(), 14u);
    EXPECT_EQ(plan.boards.size(), 14u);
    EXPECT_EQ(plan.transitions.size(), cm.adjacency.edges().size());
    EXPECT_EQ(plan.inter_board_links(), plan.transitions.size());
    for (const auto &t : plan.transitions)
      EXPECT_GE(t.channel, 1u);
  }
}

TEST(Mapper, MoreNodesThanBoardsSharesBoards) {
  auto cm = compiled(resnet18s(1));
  ASSERT_EQ(cm.nodes.size(), 30u);
  auto hw = uniform_hw(16, 8, 4, 8);
  auto plan = map_nodes(cm, hw, Strategy::LoadBalance);
  EXPECT_TRUE(check_plan(plan, cm, hw).empty());
  int max_nodes = 0;
  for (auto [b, f] : plan.fthreads)
    max_nodes = std::max(max_nodes, f);
  EXPECT_GE(max_nodes, 2);
}

TEST(Mapper, MissingClassIsCapacityError) {
  const auto &cm = resnet8_cm();
  HwInfo hw;
  hw.boards.push_back(BoardInfo{0, AccelClass::An, "", 64, 64});
  try {
    map_nodes(cm, hw, Strategy::LoadBalance);
    FAIL();
  } catch (const CapacityError &e) {
    EXPECT_EQ(e.accel_class(), "Di");
    EXPECT_EQ(e.shortfall(), 3);
  }
  auto small = uniform_hw(2, 1, 4, 8);
  try {
    map_nodes(cm, small, Strategy::MinCut);
    FAIL();
  } catch (const CapacityError &e) {
    EXPECT_EQ(e.accel_class(), "An");
    EXPECT_EQ(e.shortfall(), 3);
  }
}

TEST(Mapper, TightSThreadLimitIsConnectivityError) {
  const auto &cm = resnet8_cm();
  // One node per board forces every edge across boards; the add nodes need
  // three S-threads each.
  auto hw = uniform_hw(11, 3, 1, 1);
  EXPECT_THROW(map_nodes(cm, hw, Strategy::LoadBalance), ConnectivityError);
}

TEST(Mapper, MinCutNeverWorseThanLoadBalance) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 40; ++t) {
    auto cm = oracle::random_compiled_model(rng, static_cast<int>(oracle::rand_int(rng, 4, 16)),
                                            0.3);
    auto hw = oracle::random_hw(rng, 4, 3, 6, 12);
    try {
      auto lb = map_nodes(cm, hw, Strategy::LoadBalance);
      auto mc = map_nodes(cm, hw, Strategy::MinCut);
      EXPECT_LE(mc.inter_board_links(), lb.inter_board_links()) << t;
      EXPECT_TRUE(check_plan(mc, cm, hw).empty());
    } catch (const CapacityError &) {
    } catch (const ConnectivityError &) {
    }
  }
}

TEST(Mapper, PlansAreValidAndInfeasibilityIsReported) {
  // Against an exhaustive search on small instances: every plan returned
  // is valid and no better than the optimum; infeasible instances throw.
  std::mt19937_64 rng(9);
  int feasible = 0, solved = 0, matched_optimum = 0;
  for (int t = 0; t < 80; ++t) {
    auto cm = oracle::random_compiled_model(rng, static_cast<int>(oracle::rand_int(rng, 3, 7)),
                                            0.4);
    auto hw = oracle::random_hw(rng, 3, 2, 4, 6);
    const auto best = oracle::exhaustive_min_cut(cm, hw);
    feasible += best.has_value();
    try {
      auto plan = map_nodes(cm, hw, Strategy::MinCut);
      ASSERT_TRUE(best.has_value()) << "plan returned for infeasible instance " << t;
      EXPECT_TRUE(check_plan(plan, cm, hw).empty()) << t;
      EXPECT_GE(plan.inter_board_links(), *best);
      ++solved;
      matched_optimum += plan.inter_board_links() == *best;
    } catch (const CapacityError &) {
      EXPECT_FALSE(best.has_value()) << t;
    } catch (const ConnectivityError &) {
    }
  }
  EXPECT_GT(feasible, 30);
  // Local search: feasible instances are almost always solved, mostly
  // at the optimum.
  EXPECT_GE(solved * 10, feasible * 9);
  EXPECT_GE(matched_optimum * 10, solved * 8);
}

TEST(Mapper, CheckerFlagsBrokenPlans) {
  const auto &cm = resnet8_cm();
  auto hw = uniform_hw(11, 3, 2, 8);
  auto plan = map_nodes(cm, hw, Strategy::LoadBalance);
  auto bad = plan;
  bad.assignment["s1add"] = 0; // Add on an An board
  EXPECT_FALSE(check_plan(bad, cm, hw).empty());
  bad = plan;
  bad.assignment.erase("fc");
  EXPECT_FALSE(check_plan(bad, cm, hw).empty());
}

TEST(Configs, EmitAndLoadRoundTrip) {
  const auto &cm = resnet8_cm();
  auto hw = uniform_hw(4, 2, 4, 8);
  auto plan = map_nodes(cm, hw, Strategy::MinCut);
  const NoiseModel nm{NoiseModel::Kind::GaussianProgramming, 0.02, 0.0, 5};
  auto dir = fs::temp_directory_path() / ("imce_cfg_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  emit_configs(plan, cm, nm, dir);
  auto want = build_bundle(plan, cm, nm);
  auto got = load_bundle(dir);
  EXPECT_EQ(got, want);
  EXPECT_EQ(load_plan(dir), plan);
  for (const auto &b : plan.boards) {
    EXPECT_TRUE(fs::exists(dir / ("board_" + std::to_string(b.id) + ".cfg")));
    EXPECT_TRUE(fs::exists(dir / ("board_" + std::to_string(b.id) + ".bin")));
  }
  // Every node lands in exactly one board config with its weights intact.
  size_t nodes = 0;
  for (const auto &[id, c] : got.boards)
    for (const auto &n : c.nodes) {
      ++nodes;
      EXPECT_EQ(n, cm.nodes[cm.index_of(n.id())]);
      EXPECT_EQ(plan.assignment.at(n.id()), id);
    }
  EXPECT_EQ(nodes, cm.nodes.size());
}

TEST(Configs, DflListsEveryTransition) {
  const auto &cm = resnet8_cm();
  auto hw = uniform_hw(3, 2, 6, 8);
  auto plan = map_nodes(cm, hw, Strategy::LoadBalance);
  auto b = build_bundle(plan, cm, NoiseModel{});
  auto j = dfl_json(b);
  std::set<std::pair<std::string, std::string>> listed;
  for (const auto &t : j.at("transitions"))
    listed.insert({t.at("src").at("node").get<std::string>(),
                   t.at("dst").at("node").get<std::string>()});
  std::set<std::pair<std::string, std::string>> edges;
  for (auto [i, k] : cm.adjacency.edges())
    edges.insert({cm.adjacency.ids()[i], cm.adjacency.ids()[k]});
  EXPECT_EQ(listed, edges);
  EXPECT_EQ(j.at("s_links").get<size_t>(), plan.inter_board_links());
  // Each board config holds the transitions touching it.
  for (const auto &t : plan.transitions) {
    const auto &src = b.boards.at(t.src_board).transitions;
    const auto &dst = b.boards.at(t.dst_board).transitions;
    EXPECT_NE(std::find(src.begin(), src.end(), t), src.end());
    EXPECT_NE(std::find(dst.begin(), dst.end(), t), dst.end());
  }
}

} // namespace
} // namespace imce
