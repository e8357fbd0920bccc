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
#include <vector>

#include "imce/compiler/compiled_model.h"
#include "imce/mapper/mapper.h"
#include "imce/noise/noise.h"
#include "json.hpp"

namespace imce {

/// Graph input index -> consumer slot on this board.
struct InputBinding {
  size_t index = 0;
  std::string tensor;
  std::string node;
  size_t slot = 0;
  bool operator==(const InputBinding &) const = default;
};

/// Graph output index <- producer output on this board.
struct OutputBinding {
  size_t index = 0;
  std::string tensor;
  std::string node;
  size_t output = 0;
  bool operator==(const OutputBinding &) const = default;
};

/// Everything one board needs: its nodes (with weights), noise model and
/// the transitions touching it.
struct BoardConfig {
  int board_id = 0;
  AccelClass accel = AccelClass::An;
  std::string model;
  NoiseModel noise;
  std::vector<CompiledNode> nodes;
  /// Transitions whose source or destination is on this board.
  std::vector<Transition> transitions;
  std::vector<InputBinding> inputs;
  std::vector<OutputBinding> outputs;

  bool operator==(const BoardConfig &) const = default;
};

nlohmann::json board_config_to_json(const BoardConfig &c,
                                    std::vector<uint8_t> &blob);
BoardConfig board_config_from_json(const nlohmann::json &j,
                                   std::span<const uint8_t> blob);

/// A deployable plan: topology plus every board configuration.
struct PlanBundle {
  DeploymentPlan plan;
  std::vector<TensorSpec> inputs;
  std::vector<QuantParams> input_scales;
  std::vector<TensorSpec> outputs;
  std::vector<QuantParams> output_scales;
  NoiseModel noise;
  std::map<int, BoardConfig> boards;

  bool operator==(const PlanBundle &) const = default;
};

PlanBundle build_bundle(const DeploymentPlan &plan, const CompiledModel &cm,
                        const NoiseModel &nm);

nlohmann::json dfl_json(const PlanBundle &b);

/// Writes board_<id>.cfg + board_<id>.bin per used board and topology.dfl.
void emit_configs(const DeploymentPlan &plan, const CompiledModel &cm,
                  const NoiseModel &nm, const std::filesystem::path &dir);
void save_bundle(const PlanBundle &b, const std::filesystem::path &dir);

PlanBundle load_bundle(const std::filesystem::path &dir);
DeploymentPlan load_plan(const std::filesystem::path &dir);

} // namespace imce
