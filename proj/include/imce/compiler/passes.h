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

#include <vector>

#include "imce/compiler/compiled_model.h"
#include "imce/ir/graph.h"

namespace imce {

/// Removes Flatten/Reshape (rewiring consumers to the producer) and folds
/// nodes whose inputs are all initializers. FP32 semantics are preserved.
ModelGraph optimize(const ModelGraph &g);

/// Rewrites single-consumer patterns into accelerator operations:
/// Mul(x, Sigmoid(x)) -> SiLU, Conv2D->ReLU -> FusedConvReLU,
/// Conv2D->SiLU -> FusedConvSiLU, Add->ReLU -> FusedAddReLU. A fused node
/// keeps the id of the first node of its pattern.
ModelGraph fuse(const ModelGraph &g);

/// Replaces QuantizeLinear->DequantizeLinear pairs (and DequantizeLinear on
/// INT8 initializers) by quantization parameters on the surrounding tensors.
ModelGraph absorb_qdq(const ModelGraph &g);

struct CalibrationSet {
  /// One FP32 tensor per graph input, per sample.
  std::vector<std::vector<TensorValue>> samples;
};

struct QuantizeOptions {
  /// Throw DegenerateRangeError instead of falling back to scale 1.0.
  bool strict_ranges = false;
};

/// Static symmetric per-tensor INT8 quantization from running max-abs.
ModelGraph quantize(const ModelGraph &g, const CalibrationSet &cal,
                    const QuantizeOptions &opts = {});

/// Max-abs based scale; 1.0 (with a warning, or DegenerateRangeError when
/// strict) for an identically zero range.
float symmetric_scale(float max_abs, const std::string &tensor, bool strict);

/// Round half away from zero, saturate to [-127, 127].
int8_t quantize_value(float v, float scale);

/// 4-D Conv weights [outC, inC/group, kH, kW] (or 2-D MVM weights [out, in])
/// to rows = outC, cols = inC*kH*kW in im2col order, zero padded to
/// multiples of 16. Grouped weights expand block-diagonally.
Int8Matrix reshape_weights(const GraphNode &node, const TensorValue &w);

struct CompileOptions {
  QuantizeOptions quant;
  /// Execute AvgPool on the digital accelerator instead of as a convolution.
  bool avgpool_on_di = false;
};

/// optimize -> fuse -> quantize -> reshape, then accelerator classification.
CompiledModel compile(const ModelGraph &g, const CalibrationSet &cal,
                      const CompileOptions &opts = {});

/// Node counts after each stage, for reporting.
struct CompileReport {
  size_t input_nodes = 0;
  size_t after_optimize = 0;
  size_t after_fuse = 0;
  size_t an_nodes = 0;
  size_t di_nodes = 0;
};
CompiledModel compile(const ModelGraph &g, const CalibrationSet &cal,
                      const CompileOptions &opts, CompileReport *report);

} // namespace imce
