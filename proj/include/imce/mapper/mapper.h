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

#pragma once

#include <map>
#include <string>
#include <vector>

#include "imce/compiler/compiled_model.h"
#include "imce/mapper/hw_info.h"

namespace imce {

enum class Strategy : uint8_t { LoadBalance, MinCut, RoundRobin };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

/// One tensor carried by a transition: producer output index -> consumer
/// input slot.
struct Route {
  std::string tensor;
  size_t src_output = 0;
  size_t dst_input = 0;

  bool operator==(const Route &) const = default;
};

/// A graph transition (producer node -> consumer node). Inter-board
/// transitions are S-links; local ones are handed over in memory.
struct Transition {
  uint32_t channel = 0;
  std::string src_node;
  std::string dst_node;
  int src_board = 0;
  int dst_board = 0;
  std::vector<Route> routes;

  bool local() const { return src_board == dst_board; }
  bool operator==(const Transition &) const = default;
};

struct DeploymentPlan {
  std::string model;
  Strategy strategy = Strategy::LoadBalance;
  std::map<std::string, int> assignment;
  /// Per used board.
  std::map<int, int> fthreads;
  std::map<int, int> sthreads;
  /// Every graph transition in adjacency order; channels count from 1.
  std::vector<Transition> transitions;
  /// HW records of the boards that host at least one node.
  std::vector<BoardInfo> boards;

  size_t inter_board_links() const;
  bool operator==(const DeploymentPlan &) const = default;
};

/// Node indices (into cm.nodes) -> board id.
using Assignment = std::vector<int>;

/// Number of adjacency edges whose endpoints sit on different boards.
size_t inter_board_edges(const CompiledModel &cm, const Assignment &a);

/// Builds transitions and thread counts from an assignment.
DeploymentPlan make_plan(const CompiledModel &cm, const HwInfo &hw,
                         const Assignment &a, Strategy strategy);

/// Throws CapacityError if some class lacks F-thread capacity; otherwise
/// returns a plan satisfying every validity invariant or throws
/// ConnectivityError when S-thread limits cannot be met.
DeploymentPlan map_nodes(const CompiledModel &cm, const HwInfo &hw,
                         Strategy strategy);

/// Independent plan checker; returns the list of violated invariants.
std::vector<std::string> check_plan(const DeploymentPlan &plan,
                                    const CompiledModel &cm, const HwInfo &hw);

} // namespace imce
