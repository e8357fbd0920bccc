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

#include <filesystem>
#include <map>
#include <memory>
#include <vector>

#include "imce/runtime/cluster.h"

namespace imce {

struct LocalClusterOptions {
  /// Worker executable; empty -> $IMCE_WORKER, then imce-worker next to the
  /// running executable.
  std::filesystem::path worker;
  int threads = 4;
  bool pace = false;
  std::string log_level = "warn";
};

std::filesystem::path default_worker_path();

/// Worker processes on loopback, one per board of a plan.
class LocalCluster {
 public:
  LocalCluster(const std::vector<BoardInfo> &boards,
               const LocalClusterOptions &opts = {});
  ~LocalCluster();
  LocalCluster(const LocalCluster &) = delete;
  LocalCluster &operator=(const LocalCluster &) = delete;

  const std::map<int, Endpoint> &addresses() const { return addresses_; }
  /// Process id of a board's worker (for failure injection in tests).
  int pid(int board) const { return pids_.at(board); }
  /// Terminates every worker still running and reaps it.
  void terminate();

 private:
  std::map<int, Endpoint> addresses_;
  std::map<int, int> pids_;
};

/// Spawns workers for `bundle` and configures them.
struct LocalDeployment {
  std::unique_ptr<LocalCluster> workers;
  std::unique_ptr<ClusterHandle> handle;
};
LocalDeployment deploy_local(const PlanBundle &bundle,
                             const LocalClusterOptions &opts = {},
                             const ClusterOptions &copts = {});

} // namespace imce
