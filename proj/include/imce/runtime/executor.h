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
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "imce/compiler/compiled_model.h"
#include "imce/kernels/an.h"
#include "imce/noise/noise.h"

namespace imce {

using Codes = std::vector<int8_t>;

/// Executable node shared by workers and the sequential oracle. Weights are
/// noise-programmed once at construction.
class NodeRuntime {
 public:
  NodeRuntime(CompiledNode node, const NoiseModel &nm);

  const CompiledNode &node() const { return node_; }
  /// Number of input slots (constants included).
  size_t arity() const { return node_.node.inputs.size(); }
  bool is_constant(size_t slot) const { return node_.constants.count(slot) != 0; }
  /// Expected byte length of an input slot.
  size_t input_bytes(size_t slot) const;

  /// Runs the node for request `seq`. `inputs` holds one buffer per slot;
  /// constant slots may be left empty. Throws ShapeError on size mismatch.
  std::vector<Codes> execute(const std::vector<Codes> &inputs, uint64_t seq) const;

 private:
  CompiledNode node_;
  NoiseModel noise_;
  uint32_t node_key_ = 0;
  std::optional<AnKernel> an_;
};

/// Single-process, single-threaded execution of a compiled model with the
/// same kernels as the workers. Ground truth for distributed runs.
class SequentialExecutor {
 public:
  explicit SequentialExecutor(const CompiledModel &cm, const NoiseModel &nm = {});

  /// INT8 graph inputs (declaration order) -> INT8 graph outputs.
  std::vector<Codes> run(const std::vector<Codes> &inputs, uint64_t seq) const;

  const CompiledModel &model() const { return cm_; }

 private:
  CompiledModel cm_;
  std::vector<NodeRuntime> nodes_;
};

Codes quantize_input(std::span<const float> v, float scale);
std::vector<float> dequantize(std::span<const int8_t> codes, float scale);

/// Longest producer->consumer path weighted by node cost hints.
double critical_path_us(const CompiledModel &cm);

} // namespace imce
