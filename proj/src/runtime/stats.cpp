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

#include "imce/runtime/stats.h"

#include <cstdlib>

#include "imce/errors.h"
#include "imce/ir/model_io.h"

namespace imce {

using nlohmann::json;

std::map<uint32_t, LinkStats> StatsReport::links() const {
  std::map<uint32_t, LinkStats> out;
  for (const auto &[id, b] : boards)
    for (const auto &[ch, l] : b.links) {
      LinkStats &m = out[ch];
      m.messages_sent += l.messages_sent;
      m.bytes_sent += l.bytes_sent;
      m.messages_received += l.messages_received;
      m.bytes_received += l.bytes_received;
    }
  return out;
}

json board_stats_to_json(const BoardStats &b) {
  json nodes = json::object();
  for (const auto &[id, n] : b.nodes)
    nodes[id] = {{"invocations", n.invocations},
                 {"kernel_us", n.kernel_us},
                 {"max_queue_depth", n.max_queue_depth},
                 {"bytes_in", n.bytes_in},
                 {"bytes_out", n.bytes_out}};
  json links = json::object();
  for (const auto &[ch, l] : b.links)
    links[std::to_string(ch)] = {{"messages_sent", l.messages_sent},
                                 {"bytes_sent", l.bytes_sent},
                                 {"messages_received", l.messages_received},
                                 {"bytes_received", l.bytes_received}};
  return {{"board", b.board}, {"missing", b.missing}, {"nodes", nodes},
          {"links", links}};
}

BoardStats board_stats_from_json(const json &j) {
  BoardStats b;
  try {
    b.board = j.at("board").get<int>();
    b.missing = j.value("missing", false);
    for (const auto &[id, n] : j.at("nodes").items())
      b.nodes[id] = NodeStats{n.at("invocations").get<uint64_t>(),
                              n.at("kernel_us").get<double>(),
                              n.at("max_queue_depth").get<uint64_t>(),
                              n.at("bytes_in").get<uint64_t>(),
                              n.at("bytes_out").get<uint64_t>()};
    for (const auto &[ch, l] : j.at("links").items())
      b.links[static_cast<uint32_t>(std::stoul(ch))] =
          LinkStats{l.at("messages_sent").get<uint64_t>(),
                    l.at("bytes_sent").get<uint64_t>(),
                    l.at("messages_received").get<uint64_t>(),
                    l.at("bytes_received").get<uint64_t>()};
  } catch (const std::exception &e) {
    throw ProtocolError(std::string("stats payload: ") + e.what());
  }
  return b;
}

json stats_report_to_json(const StatsReport &r) {
  json boards = json::array();
  for (const auto &[id, b] : r.boards)
    boards.push_back(board_stats_to_json(b));
  return {{"boards", boards}};
}

std::optional<std::filesystem::path> StatsSink::env_dir() {
  if (const char *d = std::getenv("IMCE_STATS_DIR"); d && *d)
    return std::filesystem::path(d);
  return std::nullopt;
}

StatsSink::StatsSink(std::optional<std::filesystem::path> dir)
    : dir_(std::move(dir)) {}

void StatsSink::store(const BoardStats &b) {
  std::lock_guard lk(mu_);
  report_.boards[b.board] = b;
  if (dir_) {
    std::filesystem::create_directories(*dir_);
    write_text(*dir_ / ("board_" + std::to_string(b.board) + ".stats.json"),
               board_stats_to_json(b).dump(2) + "\n");
  }
}

void StatsSink::mark_missing(int board) {
  BoardStats b;
  b.board = board;
  b.missing = true;
  store(b);
}

StatsReport StatsSink::report() const {
  std::lock_guard lk(mu_);
  return report_;
}

} // namespace imce
