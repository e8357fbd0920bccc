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

#include <cstdint>
#include <exception>
#include <filesystem>
#include <ostream>
#include <string>

#include "imce/cli/tensor_bundle.h"
#include "imce/ir/tensor.h"
#include "imce/noise/noise.h"

namespace imce {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;      // parse, validation, missing file
inline constexpr int kExitQuantization = 3;
inline constexpr int kExitMapping = 4;      // capacity, connectivity
inline constexpr int kExitDistributed = 5;

int exit_code_for(const std::exception &e);

/// "sigma_prog=0.05,sigma_read=0.01[,kind=combined]"; empty -> no noise.
/// The kind follows from which sigmas are given unless set explicitly.
NoiseModel parse_noise(const std::string &spec, uint64_t seed);

/// Input source: a tensor-set file, or "uniform:N" / "digits:N" generated
/// from `seed` for inputs of the given FP32 shapes.
TensorSet make_inputs(const std::filesystem::path &file, const std::string &synthetic,
                      const std::vector<TensorSpec> &specs, uint64_t seed);

struct CompileArgs {
  std::filesystem::path model;
  /// Tensor set; when empty, 16 uniform samples from the seed are used.
  std::filesystem::path calibration;
  std::filesystem::path out_dir;
  bool strict_ranges = false;
  bool avgpool_on_di = false;
  uint64_t seed = 0;
};

struct MapArgs {
  std::filesystem::path compiled_dir;
  std::filesystem::path hw_info;
  std::filesystem::path out_dir;
  std::string strategy = "loadbalance";
};

struct RunArgs {
  /// Output of `map`. Alternatively `manifest` compiles and maps first.
  std::filesystem::path deploy_dir;
  std::filesystem::path manifest;
  std::filesystem::path inputs;
  std::string synthetic;
  std::filesystem::path out_dir;
  int window = 1;
  std::string noise;
  /// Spawn one worker per board on loopback; otherwise use the addresses
  /// recorded in the hardware description.
  bool local = true;
  int threads = 2;
  bool pace = false;
  std::filesystem::path worker;
  std::string worker_log_level = "warn";
  uint64_t seed = 0;
};

struct OracleArgs {
  /// Compiled directory, or a model JSON file with `fp32`.
  std::filesystem::path model;
  std::filesystem::path inputs;
  std::string synthetic;
  std::filesystem::path out;
  bool fp32 = false;
  std::string noise;
  uint64_t seed = 0;
};

struct StatsArgs {
  /// Run directory (stats.json) or a directory of board_<id>.stats.json.
  std::filesystem::path dir;
};

int cmd_compile(const CompileArgs &a, std::ostream &out, std::ostream &err);
int cmd_map(const MapArgs &a, std::ostream &out, std::ostream &err);
int cmd_run(const RunArgs &a, std::ostream &out, std::ostream &err);
int cmd_oracle(const OracleArgs &a, std::ostream &out, std::ostream &err);
int cmd_stats(const StatsArgs &a, std::ostream &out, std::ostream &err);

} // namespace imce
