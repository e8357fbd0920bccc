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
#include <string>
#include <vector>

#include "imce/ir/graph.h"

namespace imce {

using FloatTensors = std::map<std::string, std::vector<float>>;

/// Single-threaded FP32 interpreter over a (possibly fused) model graph.
///
/// Initializers of any dtype are widened to float; QuantizeLinear and
/// DequantizeLinear behave as fake-quantization (round half away from zero,
/// saturate to [-127, 127]). Returns the graph outputs, or every tensor when
/// `keep_all` is set.
FloatTensors run_fp32(const ModelGraph &g, const FloatTensors &inputs,
                      bool keep_all = false);

/// Convenience: single-input graph, returns graph outputs in declaration order.
std::vector<std::vector<float>> run_fp32(const ModelGraph &g,
                                         const std::vector<float> &input);

float sigmoid(float x);

} // namespace imce
