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

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "imce/mapper/configs.h"
#include "imce/runtime/executor.h"
#include "imce/runtime/socket.h"
#include "imce/runtime/stats.h"

namespace imce {

struct ClusterOptions {
  /// Per-board limit for connecting and for each configuration step.
  std::chrono::milliseconds timeout{10000};
  /// Abort a run when no result arrives for this long.
  std::chrono::milliseconds stall_timeout{120000};
};

/// Simulated schedule of one node, from cost hints.
struct NodeTiming {
  std::string node;
  int board = 0;
  double start_us = 0.0;
  double end_us = 0.0;
};

struct InferenceResult {
  uint64_t seq = 0;
  /// INT8 graph outputs in declaration order.
  std::vector<Codes> outputs;
  double wall_latency_us = 0.0;
  double simulated_latency_us = 0.0;
  std::vector<NodeTiming> timing;
};

/// Simulated latency (critical path of cost hints) and processing rate
/// (bottleneck board, nodes on one board serialized).
struct SimulatedMetrics {
  double latency_us = 0.0;
  double rate_per_s = 0.0;
  std::vector<NodeTiming> schedule;
};
SimulatedMetrics simulate(const PlanBundle &b);

/// Orchestrator side of a configured cluster.
class ClusterHandle {
 public:
  /// Opens one control connection per board, loads configuration and
  /// weights, then has every board open its S-links. Failing boards are
  /// named in the TimeoutError / ConfigError; already-contacted boards are
  /// shut down again.
  static std::unique_ptr<ClusterHandle>
  configure(const PlanBundle &bundle, const std::map<int, Endpoint> &addresses,
            const ClusterOptions &opts = {});

  ~ClusterHandle();

  using ResultCallback = std::function<void(const InferenceResult &)>;

  /// Keeps up to `window` requests in flight; results are delivered in seq
  /// order. Throws DistributedError naming the board and seq on failure
  /// (results before it have already been delivered to `on_result`).
  std::vector<InferenceResult> run(const std::vector<std::vector<Codes>> &inputs,
                                   int window, const ResultCallback &on_result = {});

  StatsReport collect_stats();
  void shutdown();

  size_t link_count() const { return links_; }
  const SimulatedMetrics &simulated() const { return sim_; }
  const PlanBundle &bundle() const { return bundle_; }

 private:
  struct Board;
  struct State;
  ClusterHandle();

  PlanBundle bundle_;
  ClusterOptions opts_;
  SimulatedMetrics sim_;
  size_t links_ = 0;
  std::map<int, std::unique_ptr<Board>> boards_;
  std::unique_ptr<State> state_;
  uint64_t next_seq_ = 1;
  bool shut_down_ = false;
};

} // namespace imce
