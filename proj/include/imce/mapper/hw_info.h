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
#include <string>
#include <vector>

#include "imce/compiler/compiled_model.h"
#include "json.hpp"

namespace imce {

/// One emulated processing-unit board.
struct BoardInfo {
  int id = 0;
  AccelClass accel = AccelClass::An;
  std::string address; // host:port, may be empty for locally spawned boards
  int max_fthreads = 1;
  int max_sthreads = 1;

  bool operator==(const BoardInfo &) const = default;
};

/// Emulator HW Info: the boards available for mapping.
struct HwInfo {
  std::vector<BoardInfo> boards;

  const BoardInfo *find(int id) const;
  bool operator==(const HwInfo &) const = default;
};

/// Throws ConfigError on duplicate ids or limits < 1.
void validate(const HwInfo &hw);

nlohmann::json hw_info_to_json(const HwInfo &hw);
HwInfo hw_info_from_json(const nlohmann::json &j);
HwInfo load_hw_info(const std::filesystem::path &path);
void save_hw_info(const HwInfo &hw, const std::filesystem::path &path);

/// n_an An boards followed by n_di Di boards, ids from 0.
HwInfo uniform_hw(int n_an, int n_di, int max_fthreads, int max_sthreads);

} // namespace imce
