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

#include "imce/mapper/hw_info.h"

#include <set>

#include "imce/errors.h"
#include "imce/ir/model_io.h"

namespace imce {

using nlohmann::json;

const BoardInfo *HwInfo::find(int id) const {
  for (const auto &b : boards)
    if (b.id == id)
      return &b;
  return nullptr;
}

void validate(const HwInfo &hw) {
  if (hw.boards.empty())
    throw ConfigError("hw info lists no boards");
  std::set<int> seen;
  for (const auto &b : hw.boards) {
    if (!seen.insert(b.id).second)
      throw ConfigError("duplicate board id " + std::to_string(b.id));
    if (b.id < 0)
      throw ConfigError("board ids must be non-negative");
    if (b.max_fthreads < 1 || b.max_sthreads < 1)
      throw ConfigError("board " + std::to_string(b.id) +
                        ": thread limits must be >= 1");
  }
}

json hw_info_to_json(const HwInfo &hw) {
  json boards = json::array();
  for (const auto &b : hw.boards)
    boards.push_back({{"board_id", b.id},
                      {"class", to_string(b.accel)},
                      {"address", b.address},
                      {"max_fthreads", b.max_fthreads},
                      {"max_sthreads", b.max_sthreads}});
  return {{"boards", boards}};
}

HwInfo hw_info_from_json(const json &j) {
  HwInfo hw;
  try {
    for (const auto &b : j.at("boards")) {
      BoardInfo bi;
      bi.id = b.at("board_id").get<int>();
      bi.accel = accel_class_from_string(b.at("class").get<std::string>());
      bi.address = b.value("address", std::string());
      bi.max_fthreads = b.at("max_fthreads").get<int>();
      bi.max_sthreads = b.at("max_sthreads").get<int>();
      hw.boards.push_back(std::move(bi));
    }
  } catch (const json::exception &e) {
    throw ConfigError(std::string("hw info: ") + e.what());
  }
  validate(hw);
  return hw;
}

HwInfo load_hw_info(const std::filesystem::path &path) {
  return hw_info_from_json(read_json(path));
}

void save_hw_info(const HwInfo &hw, const std::filesystem::path &path) {
  write_text(path, hw_info_to_json(hw).dump(2) + "\n");
}

HwInfo uniform_hw(int n_an, int n_di, int max_fthreads, int max_sthreads) {
  HwInfo hw;
  for (int i = 0; i < n_an + n_di; ++i)
    hw.boards.push_back(BoardInfo{i, i < n_an ? AccelClass::An : AccelClass::Di,
                                  "", max_fthreads, max_sthreads});
  return hw;
}

} // namespace imce
