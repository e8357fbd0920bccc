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

#include "imce/ir/graph.h"
#include "json.hpp"

namespace imce {

/// Reads `model.json` plus the sidecar blob it names, validates the graph and
/// infers intermediate shapes. Throws ParseError or ValidationError.
ModelGraph load_model(const std::filesystem::path &path);

/// Writes `path` (JSON) and `<stem>.bin` next to it.
void save_model(const ModelGraph &g, const std::filesystem::path &path);

// JSON pieces shared with the compiled-model and board-config formats.
nlohmann::json spec_to_json(const TensorSpec &s);
TensorSpec spec_from_json(const nlohmann::json &j);
nlohmann::json attrs_to_json(const Attrs &a);
Attrs attrs_from_json(const nlohmann::json &j);
nlohmann::json node_to_json(const GraphNode &n);
GraphNode node_from_json(const nlohmann::json &j);

/// Appends `v`'s bytes to `blob`, returns {"offset", "length"} plus spec.
nlohmann::json append_blob(std::vector<uint8_t> &blob, const TensorValue &v);
TensorValue read_blob(const nlohmann::json &entry,
                      std::span<const uint8_t> blob);

std::vector<uint8_t> read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::span<const uint8_t> data);
void write_text(const std::filesystem::path &path, const std::string &text);
nlohmann::json read_json(const std::filesystem::path &path);

} // namespace imce
