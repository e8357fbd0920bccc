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

#include "imce/kernels/di.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "imce/errors.h"

namespace imce {

namespace {

int64_t norm_axis(int64_t axis, size_t rank) {
  const int64_t r = static_cast<int64_t>(rank);
  if (axis < 0)
    axis += r;
  if (axis < 0 || axis >= r)
    throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " +
                     std::to_string(rank));
  return axis;
}

struct AxisView {
  int64_t outer = 1, dim = 1, inner = 1;
};

AxisView view(const Shape &s, int64_t axis) {
  AxisView v;
  for (int64_t i = 0; i < axis; ++i)
    v.outer *= s[i];
  v.dim = s[axis];
  for (size_t i = static_cast<size_t>(axis) + 1; i < s.size(); ++i)
    v.inner *= s[i];
  return v;
}

double sigmoid_d(double v) { return 1.0 / (1.0 + std::exp(-v)); }

} // namespace

QTensor add(const QTensor &a, const QTensor &b, float out_scale, bool relu) {
  if (a.shape != b.shape || a.data.size() != b.data.size())
    throw ShapeError("add operands differ: " + shape_str(a.shape) + " vs " +
                     shape_str(b.shape));
  const double sa = a.scale, sb = b.scale, so = out_scale;
  QTensor y{a.shape, std::vector<int8_t>(a.data.size()), out_scale};
  for (size_t i = 0; i < a.data.size(); ++i) {
    int8_t v = saturate_round((a.data[i] * sa + b.data[i] * sb) / so);
    y.data[i] = relu && v < 0 ? int8_t{0} : v;
  }
  return y;
}

QTensor silu(const QTensor &x, float out_scale) {
  const double si = x.scale, so = out_scale;
  QTensor y{x.shape, std::vector<int8_t>(x.data.size()), out_scale};
  // The INT8 domain is tiny: tabulate once per call.
  int8_t table[256];
  for (int c = -128; c <= 127; ++c) {
    const double v = c * si;
    table[c + 128] = saturate_round(v * sigmoid_d(v) / so);
  }
  for (size_t i = 0; i < x.data.size(); ++i)
    y.data[i] = table[x.data[i] + 128];
  return y;
}

PoolSpec PoolSpec::from_attrs(Kind kind, const Attrs &attrs) {
  PoolSpec p;
  p.kind = kind;
  auto k = attr_ints(attrs, "kernel_shape");
  auto s = attr_ints(attrs, "strides", k);
  auto d = attr_ints(attrs, "pads", {0, 0});
  if (k.size() != 2 || s.size() != 2 || d.size() != 2)
    throw ShapeError("pool attributes must have two entries each");
  p.kh = k[0];
  p.kw = k[1];
  p.sh = s[0];
  p.sw = s[1];
  p.ph = d[0];
  p.pw = d[1];
  return p;
}

Shape pool_output_shape(const Shape &in, const PoolSpec &p) {
  if (in.size() != 3 && in.size() != 4)
    throw ShapeError("pool input must be [1,C,H,W] or [C,H,W], got " +
                     shape_str(in));
  if (p.kh < 1 || p.kw < 1 || p.sh < 1 || p.sw < 1 || p.ph < 0 || p.pw < 0)
    throw ShapeError("invalid pool window");
  const size_t o = in.size() - 3;
  const int64_t oh = (in[o + 1] + 2 * p.ph - p.kh) / p.sh + 1;
  const int64_t ow = (in[o + 2] + 2 * p.pw - p.kw) / p.sw + 1;
  if (in[o + 1] + 2 * p.ph < p.kh || in[o + 2] + 2 * p.pw < p.kw || oh < 1 ||
      ow < 1)
    throw ShapeError("pool window larger than input " + shape_str(in));
  Shape out = in;
  out[o + 1] = oh;
  out[o + 2] = ow;
  return out;
}

QTensor pool(const QTensor &x, const PoolSpec &p, float out_scale) {
  const Shape out_shape = pool_output_shape(x.shape, p);
  if (num_elements(x.shape) != x.size())
    throw ShapeError("pool input buffer does not match its shape");
  const size_t o = x.shape.size() - 3;
  const int64_t C = x.shape[o], H = x.shape[o + 1], W = x.shape[o + 2];
  const int64_t OH = out_shape[o + 1], OW = out_shape[o + 2];
  QTensor y{out_shape, std::vector<int8_t>(static_cast<size_t>(C * OH * OW)),
            out_scale};
  const bool same_scale = x.scale == out_scale;
  const double window = static_cast<double>(p.kh * p.kw);
  for (int64_t c = 0; c < C; ++c)
    for (int64_t oy = 0; oy < OH; ++oy)
      for (int64_t ox = 0; ox < OW; ++ox) {
        int32_t best = std::numeric_limits<int32_t>::min();
        int32_t sum = 0;
        for (int64_t ky = 0; ky < p.kh; ++ky) {
          const int64_t iy = oy * p.sh - p.ph + ky;
          if (iy < 0 || iy >= H)
            continue;
          for (int64_t kx = 0; kx < p.kw; ++kx) {
            const int64_t ix = ox * p.sw - p.pw + kx;
            if (ix < 0 || ix >= W)
              continue;
            const int32_t v = x.data[(c * H + iy) * W + ix];
            best = std::max(best, v);
            sum += v;
          }
        }
        int8_t r;
        if (p.kind == PoolSpec::Kind::Max) {
          if (best == std::numeric_limits<int32_t>::min())
            best = 0; // window entirely in padding
          // Dequantization is monotone, so the max code is the max value.
          r = same_scale ? static_cast<int8_t>(best)
                         : saturate_round(best * static_cast<double>(x.scale) /
                                          out_scale);
        } else {
          r = saturate_round(sum * static_cast<double>(x.scale) / window /
                             out_scale);
        }
        y.data[(c * OH + oy) * OW + ox] = r;
      }
  return y;
}

QTensor concat(const std::vector<QTensor> &parts, int64_t axis,
               float out_scale) {
  if (parts.empty())
    throw ShapeError("concat needs at least one part");
  const Shape &s0 = parts[0].shape;
  axis = norm_axis(axis, s0.size());
  Shape out = s0;
  out[axis] = 0;
  for (const auto &p : parts) {
    if (p.scale != out_scale)
      throw ScaleMismatchError("concat part scale " + std::to_string(p.scale) +
                               " differs from output scale " +
                               std::to_string(out_scale));
    if (p.shape.size() != s0.size())
      throw ShapeError("concat parts differ in rank");
    for (size_t i = 0; i < s0.size(); ++i)
      if (static_cast<int64_t>(i) != axis && p.shape[i] != s0[i])
        throw ShapeError("concat parts differ off-axis: " + shape_str(p.shape) +
                         " vs " + shape_str(s0));
    if (num_elements(p.shape) != p.size())
      throw ShapeError("concat part buffer does not match its shape");
    out[axis] += p.shape[axis];
  }
  const AxisView vo = view(out, axis);
  QTensor y{out, std::vector<int8_t>(static_cast<size_t>(num_elements(out))),
            out_scale};
  int64_t offset = 0;
  for (const auto &p : parts) {
    const int64_t chunk = p.shape[axis] * vo.inner;
    for (int64_t k = 0; k < vo.outer; ++k)
      std::copy_n(p.data.begin() + k * chunk, chunk,
                  y.data.begin() + k * vo.dim * vo.inner + offset);
    offset += chunk;
  }
  return y;
}

std::vector<QTensor> split(const QTensor &x, int64_t axis,
                           const std::vector<int64_t> &sizes) {
  axis = norm_axis(axis, x.shape.size());
  if (num_elements(x.shape) != x.size())
    throw ShapeError("split input buffer does not match its shape");
  int64_t total = 0;
  for (int64_t s : sizes) {
    if (s < 1)
      throw ShapeError("split sizes must be positive");
    total += s;
  }
  if (total != x.shape[axis])
    throw ShapeError("split sizes sum to " + std::to_string(total) +
                     ", axis dimension is " + std::to_string(x.shape[axis]));
  const AxisView v = view(x.shape, axis);
  std::vector<QTensor> parts;
  int64_t offset = 0;
  for (int64_t s : sizes) {
    Shape ps = x.shape;
    ps[axis] = s;
    QTensor p{ps, std::vector<int8_t>(static_cast<size_t>(num_elements(ps))),
              x.scale};
    const int64_t chunk = s * v.inner;
    for (int64_t k = 0; k < v.outer; ++k)
      std::copy_n(x.data.begin() + k * v.dim * v.inner + offset, chunk,
                  p.data.begin() + k * chunk);
    offset += chunk;
    parts.push_back(std::move(p));
  }
  return parts;
}

std::vector<QTensor> run_di(const CompiledNode &n,
                            const std::vector<QTensor> &in) {
  const float out_scale = n.out_scales.at(0).scale;
  switch (n.kind()) {
  case OpKind::Add:
  case OpKind::FusedAddReLU:
    return {add(in.at(0), in.at(1), out_scale,
                n.kind() == OpKind::FusedAddReLU)};
  case OpKind::SiLU:
    return {silu(in.at(0), out_scale)};
  case OpKind::MaxPool:
    return {pool(in.at(0), PoolSpec::from_attrs(PoolSpec::Kind::Max, n.node.attrs),
                 out_scale)};
  case OpKind::AvgPool:
    return {pool(in.at(0), PoolSpec::from_attrs(PoolSpec::Kind::Avg, n.node.attrs),
                 out_scale)};
  case OpKind::Concat:
    return {concat(in, attr_int(n.node.attrs, "axis"), out_scale)};
  case OpKind::Split: {
    auto parts = split(in.at(0), attr_int(n.node.attrs, "axis"),
                       attr_ints(n.node.attrs, "split"));
    for (size_t i = 0; i < parts.size(); ++i) {
      const float so = n.out_scales.at(i).scale;
      if (so != parts[i].scale)
        for (auto &c : parts[i].data)
          c = saturate_round(c * static_cast<double>(parts[i].scale) / so);
      parts[i].scale = so;
    }
    return parts;
  }
  default:
    throw UnsupportedOpError(n.id(), "node '" + n.id() + "' (" +
                                         std::string(to_string(n.kind())) +
                                         ") is not a Di-Accelerator function");
  }
}

} // namespace imce
