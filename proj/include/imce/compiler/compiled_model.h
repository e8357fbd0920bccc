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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imce/ir/graph.h"
#include "imce/ir/matrix.h"

namespace imce {

enum class AccelClass : uint8_t { An, Di };

std::string_view to_string(AccelClass c);
AccelClass accel_class_from_string(std::string_view s);

/// One accelerator-ready node.
///
/// For Conv-class and MVM nodes `weights2d` holds the quantized weights as
/// rows = output channels, cols = receptive-field length (C*kH*kW, channel
/// major) or input length, both padded up to a multiple of 16. The
/// An-Accelerator stores the transpose.
struct CompiledNode {
  GraphNode node;
  AccelClass accel = AccelClass::An;
  /// Kind before lowering when it differs, e.g. AvgPool executed as Conv2D.
  std::string origin;
  std::optional<Int8Matrix> weights2d;
  /// INT32 bias, one entry per logical output channel.
  std::vector<int32_t> bias;
  QuantParams weight_scale;
  /// Scales of activation inputs, in node input order (constants included).
  std::vector<QuantParams> in_scales;
  std::vector<QuantParams> out_scales;
  /// INT8 specs of activation inputs and of outputs.
  std::vector<TensorSpec> in_specs;
  std::vector<TensorSpec> out_specs;
  /// Constant INT8 operands baked into the node, keyed by input slot.
  std::map<size_t, std::vector<int8_t>> constants;
  double cost_hint_us = 0.0;

  const std::string &id() const { return node.id; }
  OpKind kind() const { return node.kind; }
  bool operator==(const CompiledNode &) const = default;
};

/// Per-node record of the FPGA Info List.
struct FpgaInfo {
  std::string id;
  AccelClass accel;
  std::string op;
  int64_t in_bytes = 0;
  int64_t out_bytes = 0;
  double cost_hint_us = 0.0;

  bool operator==(const FpgaInfo &) const = default;
};

struct CompiledModel {
  std::string name;
  /// Topological order; index i matches adjacency row i.
  std::vector<CompiledNode> nodes;
  Adjacency adjacency;
  std::vector<FpgaInfo> fpga_info;
  /// INT8 specs of graph inputs/outputs with their scales.
  std::vector<TensorSpec> inputs;
  std::vector<QuantParams> input_scales;
  std::vector<TensorSpec> outputs;
  std::vector<QuantParams> output_scales;

  size_t index_of(std::string_view id) const;
  bool operator==(const CompiledModel &) const = default;
};

} // namespace imce
