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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "imce/compiler/compiled_model.h"
#include "imce/ir/matrix.h"

namespace imce {

/// INT8 activation tensor with its per-tensor scale.
struct QTensor {
  Shape shape;
  std::vector<int8_t> data;
  float scale = 1.0f;

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  bool operator==(const QTensor &) const = default;
};

/// round-half-away-from-zero, saturated to the symmetric range [-127, 127].
int8_t saturate_round(float v);
int8_t saturate_round(double v);

/// Weight matrix as held by the MVM engine: rows index the input vector,
/// cols index the outputs. Both padded to multiples of 16.
struct AnMatrix {
  static constexpr int64_t kMaxRows = 4096;
  static constexpr int64_t kMaxCols = 512;

  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<int8_t> data;
  QuantParams weight_scale;

  AnMatrix() = default;
  /// Throws SizeError unless 16 | rows, 16 | cols and within the limits.
  AnMatrix(int64_t rows, int64_t cols, std::vector<int8_t> data,
           QuantParams weight_scale);

  /// Transposes a compiler weights2d (outputs x inputs) into engine layout.
  static AnMatrix from_weights2d(const Int8Matrix &w, QuantParams scale);

  int8_t at(int64_t r, int64_t c) const { return data[r * cols + c]; }
  bool operator==(const AnMatrix &) const = default;
};

/// Exact INT32 accumulation y_j = sum_i x_i * w_ij. `acc` has m.cols entries.
void mvm_accumulate(const AnMatrix &m, std::span<const int8_t> x,
                    std::span<int32_t> acc);

/// Full MVM with FP32 requantization by in_scale * weight_scale / out_scale.
std::vector<int8_t> mvm(const AnMatrix &m, std::span<const int8_t> x,
                        float in_scale, float out_scale);

struct Im2colPlan {
  int64_t channels = 0, height = 0, width = 0;
  int64_t kh = 1, kw = 1;
  int64_t sh = 1, sw = 1;
  int64_t ph = 0, pw = 0;

  int64_t out_h() const { return (height + 2 * ph - kh) / sh + 1; }
  int64_t out_w() const { return (width + 2 * pw - kw) / sw + 1; }
  int64_t patch_len() const { return channels * kh * kw; }
  int64_t n_patches() const { return out_h() * out_w(); }
};

/// Builds a plan from a conv node's attributes and an NCHW / CHW shape.
Im2colPlan make_im2col_plan(const Shape &in_shape, const Attrs &attrs);

/// Patch matrix [n_patches x row_stride]; columns beyond patch_len and pad
/// positions are zero. row_stride defaults to patch_len.
Int8Matrix im2col(std::span<const int8_t> x, const Im2colPlan &plan,
                  int64_t row_stride = 0);

enum class Epilogue : uint8_t { None, ReLU, SiLU };

Epilogue epilogue_of(OpKind kind);

/// Requantizes one accumulator. For SiLU the accumulator is dequantized by
/// acc_scale, passed through x*sigmoid(x) and requantized by out_scale.
int8_t requantize(int32_t acc, float acc_scale, float out_scale, Epilogue ep);

/// Called with the raw accumulators of each MVM (noise injection point).
using AccumulatorHook =
    std::function<void(std::span<int32_t> acc, uint64_t mvm_index)>;

/// Executable form of an An node: MVM (Flatten-free vector input) or conv.
struct AnKernel {
  AnMatrix matrix;
  std::vector<int32_t> bias;
  float in_scale = 1.0f;
  float out_scale = 1.0f;
  Epilogue epilogue = Epilogue::None;
  std::optional<Im2colPlan> conv;
  int64_t out_channels = 0;
  Shape out_shape;

  static AnKernel from_node(const CompiledNode &n);

  /// INT8 input codes -> INT8 output codes (NCHW for conv).
  std::vector<int8_t> run(std::span<const int8_t> x,
                          const AccumulatorHook &hook = {}) const;
};

/// Conv-class node on an activation tensor.
QTensor conv2d(const QTensor &x, const CompiledNode &node, Epilogue ep);

} // namespace imce
