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

#include "imce/kernels/an.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "imce/compiler/reference.h"
#include "imce/errors.h"

namespace imce {

int8_t saturate_round(float v) {
  float r = std::round(v);
  return static_cast<int8_t>(std::clamp(r, -127.0f, 127.0f));
}

int8_t saturate_round(double v) {
  double r = std::round(v);
  return static_cast<int8_t>(std::clamp(r, -127.0, 127.0));
}

AnMatrix::AnMatrix(int64_t r, int64_t c, std::vector<int8_t> d, QuantParams ws)
    : rows(r), cols(c), data(std::move(d)), weight_scale(ws) {
  if (rows <= 0 || cols <= 0 || rows % 16 != 0 || cols % 16 != 0 ||
      rows > kMaxRows || cols > kMaxCols)
    throw SizeError("An matrix " + std::to_string(rows) + "x" +
                    std::to_string(cols) +
                    " violates the x16 / 4096x512 constraints");
  if (static_cast<int64_t>(data.size()) != rows * cols)
    throw ShapeError("An matrix buffer holds " + std::to_string(data.size()) +
                     " codes, expected " + std::to_string(rows * cols));
}

AnMatrix AnMatrix::from_weights2d(const Int8Matrix &w, QuantParams scale) {
  std::vector<int8_t> t(static_cast<size_t>(w.rows * w.cols));
  for (int64_t o = 0; o < w.rows; ++o)
    for (int64_t i = 0; i < w.cols; ++i)
      t[i * w.rows + o] = w.at(o, i);
  return AnMatrix(w.cols, w.rows, std::move(t), scale);
}

void mvm_accumulate(const AnMatrix &m, std::span<const int8_t> x,
                    std::span<int32_t> acc) {
  if (static_cast<int64_t>(x.size()) != m.rows)
    throw ShapeError("MVM input has " + std::to_string(x.size()) +
                     " elements, matrix has " + std::to_string(m.rows) + " rows");
  if (static_cast<int64_t>(acc.size()) != m.cols)
    throw ShapeError("MVM accumulator size mismatch");
  std::fill(acc.begin(), acc.end(), 0);
  const int64_t cols = m.cols;
  int32_t *a = acc.data();
  for (int64_t i = 0; i < m.rows; ++i) {
    const int32_t xi = x[i];
    if (xi == 0)
      continue;
    const int8_t *row = m.data.data() + i * cols;
    for (int64_t j = 0; j < cols; ++j)
      a[j] += xi * static_cast<int32_t>(row[j]);
  }
}

std::vector<int8_t> mvm(const AnMatrix &m, std::span<const int8_t> x,
                        float in_scale, float out_scale) {
  std::vector<int32_t> acc(static_cast<size_t>(m.cols));
  mvm_accumulate(m, x, acc);
  const float acc_scale = in_scale * m.weight_scale.scale;
  std::vector<int8_t> y(acc.size());
  for (size_t j = 0; j < acc.size(); ++j)
    y[j] = requantize(acc[j], acc_scale, out_scale, Epilogue::None);
  return y;
}

Im2colPlan make_im2col_plan(const Shape &s, const Attrs &attrs) {
  if (s.size() != 4 && s.size() != 3)
    throw ShapeError("conv input must be [1,C,H,W] or [C,H,W], got " +
                     shape_str(s));
  const size_t o = s.size() - 3;
  Im2colPlan p;
  p.channels = s[o];
  p.height = s[o + 1];
  p.width = s[o + 2];
  auto k = attr_ints(attrs, "kernel_shape");
  auto st = attr_ints(attrs, "strides", {1, 1});
  auto pd = attr_ints(attrs, "pads", {0, 0});
  if (k.size() != 2 || st.size() != 2 || pd.size() != 2)
    throw ShapeError("conv attributes must have two entries each");
  p.kh = k[0];
  p.kw = k[1];
  p.sh = st[0];
  p.sw = st[1];
  p.ph = pd[0];
  p.pw = pd[1];
  if (p.kh < 1 || p.kw < 1 || p.sh < 1 || p.sw < 1 || p.ph < 0 || p.pw < 0 ||
      p.out_h() < 1 || p.out_w() < 1)
    throw ShapeError("conv window does not fit input " + shape_str(s));
  return p;
}

Int8Matrix im2col(std::span<const int8_t> x, const Im2colPlan &p,
                  int64_t row_stride) {
  if (static_cast<int64_t>(x.size()) != p.channels * p.height * p.width)
    throw ShapeError("im2col input has " + std::to_string(x.size()) +
                     " elements, plan expects " +
                     std::to_string(p.channels * p.height * p.width));
  if (row_stride == 0)
    row_stride = p.patch_len();
  if (row_stride < p.patch_len())
    throw ShapeError("im2col row stride shorter than patch length");
  const int64_t oh = p.out_h(), ow = p.out_w();
  Int8Matrix m(oh * ow, row_stride);
  for (int64_t oy = 0; oy < oh; ++oy)
    for (int64_t ox = 0; ox < ow; ++ox) {
      int8_t *row = m.data.data() + (oy * ow + ox) * row_stride;
      for (int64_t c = 0; c < p.channels; ++c)
        for (int64_t ky = 0; ky < p.kh; ++ky) {
          const int64_t iy = oy * p.sh - p.ph + ky;
          for (int64_t kx = 0; kx < p.kw; ++kx) {
            const int64_t ix = ox * p.sw - p.pw + kx;
            if (iy >= 0 && iy < p.height && ix >= 0 && ix < p.width)
              row[(c * p.kh + ky) * p.kw + kx] =
                  x[(c * p.height + iy) * p.width + ix];
          }
        }
    }
  return m;
}

Epilogue epilogue_of(OpKind kind) {
  switch (kind) {
  case OpKind::FusedConvReLU:
    return Epilogue::ReLU;
  case OpKind::FusedConvSiLU:
    return Epilogue::SiLU;
  default:
    return Epilogue::None;
  }
}

int8_t requantize(int32_t acc, float acc_scale, float out_scale, Epilogue ep) {
  if (ep == Epilogue::SiLU) {
    const float v = static_cast<float>(acc) * acc_scale;
    return saturate_round(v * sigmoid(v) / out_scale);
  }
  const float m = acc_scale / out_scale;
  int8_t y = saturate_round(static_cast<float>(acc) * m);
  if (ep == Epilogue::ReLU && y < 0)
    y = 0;
  return y;
}

AnKernel AnKernel::from_node(const CompiledNode &n) {
  if (!n.weights2d)
    throw ShapeError("node '" + n.id() + "' has no weights2d");
  if (n.in_specs.empty() || n.out_specs.empty())
    throw ShapeError("node '" + n.id() + "' lacks input/output specs");
  AnKernel k;
  k.matrix = AnMatrix::from_weights2d(*n.weights2d, n.weight_scale);
  k.bias = n.bias;
  k.in_scale = n.in_scales.at(0).scale;
  k.out_scale = n.out_scales.at(0).scale;
  k.epilogue = epilogue_of(n.kind());
  k.out_shape = n.out_specs[0].shape;
  if (is_conv_class(n.kind())) {
    k.conv = make_im2col_plan(n.in_specs[0].shape, n.node.attrs);
    k.out_channels = k.out_shape.at(1);
    if (k.conv->patch_len() > k.matrix.rows)
      throw ShapeError("node '" + n.id() + "': patch length exceeds matrix rows");
  } else {
    k.out_channels = num_elements(k.out_shape);
    if (n.in_specs[0].num_elements() > k.matrix.rows)
      throw ShapeError("node '" + n.id() + "': input exceeds matrix rows");
  }
  if (k.out_channels > k.matrix.cols)
    throw ShapeError("node '" + n.id() + "': outputs exceed matrix cols");
  if (!k.bias.empty() && static_cast<int64_t>(k.bias.size()) != k.out_channels)
    throw ShapeError("node '" + n.id() + "': bias length mismatch");
  return k;
}

std::vector<int8_t> AnKernel::run(std::span<const int8_t> x,
                                  const AccumulatorHook &hook) const {
  const float acc_scale = in_scale * matrix.weight_scale.scale;
  std::vector<int32_t> acc(static_cast<size_t>(matrix.cols));
  auto finish = [&](uint64_t index) {
    for (size_t j = 0; j < bias.size(); ++j)
      acc[j] += bias[j];
    if (hook)
      hook(acc, index);
  };

  if (!conv) {
    std::vector<int8_t> padded(static_cast<size_t>(matrix.rows), 0);
    if (static_cast<int64_t>(x.size()) > matrix.rows)
      throw ShapeError("MVM input longer than matrix rows");
    std::copy(x.begin(), x.end(), padded.begin());
    mvm_accumulate(matrix, padded, acc);
    finish(0);
    std::vector<int8_t> y(static_cast<size_t>(out_channels));
    for (int64_t j = 0; j < out_channels; ++j)
      y[j] = requantize(acc[j], acc_scale, out_scale, epilogue);
    return y;
  }

  const Int8Matrix patches = im2col(x, *conv, matrix.rows);
  const int64_t np = patches.rows;
  std::vector<int8_t> y(static_cast<size_t>(out_channels * np));
  for (int64_t p = 0; p < np; ++p) {
    mvm_accumulate(matrix,
                   std::span<const int8_t>(patches.data.data() + p * patches.cols,
                                           static_cast<size_t>(patches.cols)),
                   acc);
    finish(static_cast<uint64_t>(p));
    for (int64_t o = 0; o < out_channels; ++o)
      y[o * np + p] = requantize(acc[o], acc_scale, out_scale, epilogue);
  }
  return y;
}

QTensor conv2d(const QTensor &x, const CompiledNode &node, Epilogue ep) {
  if (!is_conv_class(node.kind()))
    throw ShapeError("node '" + node.id() + "' is not a convolution");
  AnKernel k = AnKernel::from_node(node);
  k.epilogue = ep;
  k.in_scale = x.scale;
  if (x.shape != node.in_specs[0].shape)
    throw ShapeError("conv input shape " + shape_str(x.shape) +
                     " does not match node spec " +
                     shape_str(node.in_specs[0].shape));
  return QTensor{k.out_shape, k.run(x.data), k.out_scale};
}

} // namespace imce
