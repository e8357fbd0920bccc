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

#include "imce/compiler/compiled_model.h"
#include "json.hpp"

namespace imce {

// Compiled model directory layout:
//   compiled.json  nodes, scales, specs, blob references
//   compiled.bin   INT8 weight matrices, INT32 biases, INT8 constants
//   fpga_info.json FPGA Info List: per-node class, byte sizes, cost hint
//   adjacency.json Node Adjacency Matrix as an edge list

void save_compiled(const CompiledModel &cm, const std::filesystem::path &dir);
CompiledModel load_compiled(const std::filesystem::path &dir);

nlohmann::json fpga_info_json(const CompiledModel &cm);
nlohmann::json adjacency_json(const Adjacency &adj);

/// JSON for one node; weights/bias/constants are appended to `blob`.
nlohmann::json compiled_node_to_json(const CompiledNode &n,
                                     std::vector<uint8_t> &blob);
CompiledNode compiled_node_from_json(const nlohmann::json &j,
                                     std::span<const uint8_t> blob);

} // namespace imce
