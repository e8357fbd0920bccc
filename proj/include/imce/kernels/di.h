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
#include <span>
#include <vector>

#include "imce/compiler/compiled_model.h"
#include "imce/kernels/an.h"

namespace imce {

// Digital accelerator kernels. INT8 in, INT8 out; arithmetic is carried out
// in double precision and requantized with saturate_round().

QTensor add(const QTensor &a, const QTensor &b, float out_scale, bool relu);

QTensor silu(const QTensor &x, float out_scale);

struct PoolSpec {
  enum class Kind : uint8_t { Max, Avg };
  Kind kind = Kind::Max;
  int64_t kh = 2, kw = 2;
  int64_t sh = 2, sw = 2;
  int64_t ph = 0, pw = 0;

  static PoolSpec from_attrs(Kind kind, const Attrs &attrs);
};

/// Output shape for an NCHW or CHW input. Throws ShapeError.
Shape pool_output_shape(const Shape &in, const PoolSpec &spec);

/// Max: pads are ignored (never selected). Avg: INT32 window sum divided by
/// the full window size (pads count as zero).
QTensor pool(const QTensor &x, const PoolSpec &spec, float out_scale);

/// Every part must carry `out_scale` exactly, else ScaleMismatchError.
QTensor concat(const std::vector<QTensor> &parts, int64_t axis,
               float out_scale);

std::vector<QTensor> split(const QTensor &x, int64_t axis,
                           const std::vector<int64_t> &sizes);

/// Dispatches a Di-class compiled node. Inputs are in node input order with
/// constants already substituted.
std::vector<QTensor> run_di(const CompiledNode &n,
                            const std::vector<QTensor> &inputs);

} // namespace imce
