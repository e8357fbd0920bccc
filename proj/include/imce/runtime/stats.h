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
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"

namespace imce {

struct NodeStats {
  uint64_t invocations = 0;
  /// Measured wall time spent inside kernels.
  double kernel_us = 0.0;
  uint64_t max_queue_depth = 0;
  uint64_t bytes_in = 0;
  uint64_t bytes_out = 0;

  bool operator==(const NodeStats &) const = default;
};

/// Counters of one S-link channel as seen by one endpoint. Byte counts
/// include framing.
struct LinkStats {
  uint64_t messages_sent = 0;
  uint64_t bytes_sent = 0;
  uint64_t messages_received = 0;
  uint64_t bytes_received = 0;

  bool operator==(const LinkStats &) const = default;
};

struct BoardStats {
  int board = 0;
  bool missing = false;
  std::map<std::string, NodeStats> nodes;
  std::map<uint32_t, LinkStats> links;

  bool operator==(const BoardStats &) const = default;
};

struct StatsReport {
  std::map<int, BoardStats> boards;

  /// Link counters merged over both endpoints.
  std::map<uint32_t, LinkStats> links() const;
  bool operator==(const StatsReport &) const = default;
};

nlohmann::json board_stats_to_json(const BoardStats &b);
BoardStats board_stats_from_json(const nlohmann::json &j);
nlohmann::json stats_report_to_json(const StatsReport &r);

/// Central collector with one region per board (the analytics server's
/// per-unit memory). Regions spill to $IMCE_STATS_DIR when set.
class StatsSink {
 public:
  explicit StatsSink(std::optional<std::filesystem::path> spill_dir = env_dir());

  void store(const BoardStats &b);
  void mark_missing(int board);
  StatsReport report() const;

  static std::optional<std::filesystem::path> env_dir();

 private:
  mutable std::mutex mu_;
  std::optional<std::filesystem::path> dir_;
  StatsReport report_;
};

} // namespace imce
