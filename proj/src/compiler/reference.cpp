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

#include "imce/compiler/reference.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imce/errors.h"

namespace imce {

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

namespace {

float fake_quant(float v, float scale) {
  float q = std::round(v / scale);
  return std::clamp(q, -127.0f, 127.0f);
}

struct Conv {
  int64_t c, h, w, oc, kh, kw, sh, sw, ph, pw, group, oh, ow;
};

Conv conv_geometry(const GraphNode &n, const Shape &x, const Shape &wshape) {
  Conv g{};
  g.c = x[1];
  g.h = x[2];
  g.w = x[3];
  g.oc = wshape[0];
  auto k = attr_ints(n.attrs, "kernel_shape");
  auto s = attr_ints(n.attrs, "strides");
  auto p = attr_ints(n.attrs, "pads", {0, 0});
  g.kh = k[0];
  g.kw = k[1];
  g.sh = s[0];
  g.sw = s[1];
  g.ph = p[0];
  g.pw = p[1];
  g.group = attr_int(n.attrs, "group", 1);
  g.oh = (g.h + 2 * g.ph - g.kh) / g.sh + 1;
  g.ow = (g.w + 2 * g.pw - g.kw) / g.sw + 1;
  return g;
}

std::vector<float> conv2d(const Conv &g, const std::vector<float> &x,
                          const std::vector<float> &w,
                          const std::vector<float> *bias) {
  std::vector<float> y(static_cast<size_t>(g.oc * g.oh * g.ow));
  const int64_t cin_g = g.c / g.group, cout_g = g.oc / g.group;
  for (int64_t o = 0; o < g.oc; ++o) {
    const int64_t c0 = (o / cout_g) * cin_g;
    for (int64_t oy = 0; oy < g.oh; ++oy)
      for (int64_t ox = 0; ox < g.ow; ++ox) {
        float acc = bias ? (*bias)[o] : 0.0f;
        for (int64_t ci = 0; ci < cin_g; ++ci)
          for (int64_t ky = 0; ky < g.kh; ++ky) {
            int64_t iy = oy * g.sh - g.ph + ky;
            if (iy < 0 || iy >= g.h)
              continue;
            for (int64_t kx = 0; kx < g.kw; ++kx) {
              int64_t ix = ox * g.sw - g.pw + kx;
              if (ix < 0 || ix >= g.w)
                continue;
              acc += x[((c0 + ci) * g.h + iy) * g.w + ix] *
                     w[((o * cin_g + ci) * g.kh + ky) * g.kw + kx];
            }
          }
        y[(o * g.oh + oy) * g.ow + ox] = acc;
      }
  }
  return y;
}

std::vector<float> pool(const GraphNode &n, const Shape &x,
                        const std::vector<float> &in, bool is_max) {
  auto k = attr_ints(n.attrs, "kernel_shape");
  auto s = attr_ints(n.attrs, "strides");
  auto p = attr_ints(n.attrs, "pads", {0, 0});
  int64_t c = x[1], h = x[2], w = x[3];
  int64_t oh = (h + 2 * p[0] - k[0]) / s[0] + 1;
  int64_t ow = (w + 2 * p[1] - k[1]) / s[1] + 1;
  std::vector<float> y(static_cast<size_t>(c * oh * ow));
  const float window = static_cast<float>(k[0] * k[1]);
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox) {
        float acc = is_max ? -std::numeric_limits<float>::infinity() : 0.0f;
        for (int64_t ky = 0; ky < k[0]; ++ky) {
          int64_t iy = oy * s[0] - p[0] + ky;
          if (iy < 0 || iy >= h)
            continue;
          for (int64_t kx = 0; kx < k[1]; ++kx) {
            int64_t ix = ox * s[1] - p[1] + kx;
            if (ix < 0 || ix >= w)
              continue;
            float v = in[(ch * h + iy) * w + ix];
            acc = is_max ? std::max(acc, v) : acc + v;
          }
        }
        y[(ch * oh + oy) * ow + ox] = is_max ? acc : acc / window;
      }
  return y;
}

// Splits a shape around `axis` into (outer, axis dim, inner).
struct AxisView {
  int64_t outer, dim, inner;
};

AxisView axis_view(const Shape &s, int64_t axis) {
  AxisView v{1, s[axis], 1};
  for (int64_t d = 0; d < axis; ++d)
    v.outer *= s[d];
  for (size_t d = axis + 1; d < s.size(); ++d)
    v.inner *= s[d];
  return v;
}

} // namespace

FloatTensors run_fp32(const ModelGraph &g, const FloatTensors &inputs,
                      bool keep_all) {
  FloatTensors env;
  std::map<std::string, Shape> shapes;
  for (const auto &s : g.graph_inputs) {
    auto it = inputs.find(s.name);
    if (it == inputs.end())
      throw ShapeError("missing graph input '" + s.name + "'");
    if (static_cast<int64_t>(it->second.size()) != s.num_elements())
      throw ShapeError("graph input '" + s.name + "' expects " +
                       std::to_string(s.num_elements()) + " values, got " +
                       std::to_string(it->second.size()));
    env[s.name] = it->second;
    shapes[s.name] = s.shape;
  }
  for (const auto &[name, v] : g.initializers) {
    env[name] = v.to_float();
    shapes[name] = v.shape();
  }

  for (const auto &id : topological_order(g)) {
    const GraphNode &n = *g.find_node(id);
    auto in = [&](size_t i) -> const std::vector<float> & {
      return env.at(n.inputs.at(i));
    };
    auto shape = [&](size_t i) -> const Shape & {
      return shapes.at(n.inputs.at(i));
    };
    std::vector<std::vector<float>> outs;
    switch (n.kind) {
    case OpKind::Conv2D:
    case OpKind::FusedConvReLU:
    case OpKind::FusedConvSiLU: {
      Conv geo = conv_geometry(n, shape(0), shape(1));
      auto y = conv2d(geo, in(0), in(1), n.inputs.size() == 3 ? &in(2) : nullptr);
      if (n.kind == OpKind::FusedConvReLU)
        for (float &v : y)
          v = std::max(v, 0.0f);
      if (n.kind == OpKind::FusedConvSiLU)
        for (float &v : y)
          v = v * sigmoid(v);
      outs.push_back(std::move(y));
      break;
    }
    case OpKind::MVM: {
      const auto &x = in(0);
      const auto &w = in(1);
      int64_t out = shape(1)[0], len = shape(1)[1];
      std::vector<float> y(static_cast<size_t>(out));
      for (int64_t o = 0; o < out; ++o) {
        float acc = n.inputs.size() == 3 ? in(2)[o] : 0.0f;
        for (int64_t i = 0; i < len; ++i)
          acc += w[o * len + i] * x[i];
        y[o] = acc;
      }
      outs.push_back(std::move(y));
      break;
    }
    case OpKind::Add:
    case OpKind::FusedAddReLU: {
      std::vector<float> y(in(0).size());
      for (size_t i = 0; i < y.size(); ++i) {
        y[i] = in(0)[i] + in(1)[i];
        if (n.kind == OpKind::FusedAddReLU)
          y[i] = std::max(y[i], 0.0f);
      }
      outs.push_back(std::move(y));
      break;
    }
    case OpKind::Mul: {
      std::vector<float> y(in(0).size());
      for (size_t i = 0; i < y.size(); ++i)
        y[i] = in(0)[i] * in(1)[i];
      outs.push_back(std::move(y));
      break;
    }
    case OpKind::ReLU: {
      auto y = in(0);
      for (float &v : y)
        v = std::max(v, 0.0f);
      outs.push_back(std::move(y));
      break;
    }
    case OpKind::Sigmoid: {
      auto y = in(0);
      for (float &v : y)
        v = sigmoid(v);
      outs.push_back(std::move(y));
      break;
    }
    case OpKind::SiLU: {
      auto y = in(0);
      for (float &v : y)
        v = v * sigmoid(v);
      outs.push_back(std::move(y));
      break;
    }
    case OpKind::MaxPool:
    case OpKind::AvgPool:
      outs.push_back(pool(n, shape(0), in(0), n.kind == OpKind::MaxPool));
      break;
    case OpKind::Concat: {
      int64_t axis = attr_int(n.attrs, "axis");
      AxisView first = axis_view(shape(0), axis);
      std::vector<float> y;
      for (int64_t o = 0; o < first.outer; ++o)
        for (size_t i = 0; i < n.inputs.size(); ++i) {
          AxisView v = axis_view(shape(i), axis);
          const auto &src = in(i);
          auto begin = src.begin() + o * v.dim * v.inner;
          y.insert(y.end(), begin, begin + v.dim * v.inner);
        }
      outs.push_back(std::move(y));
      break;
    }
    case OpKind::Split: {
      int64_t axis = attr_int(n.attrs, "axis");
      auto sizes = attr_ints(n.attrs, "split");
      AxisView v = axis_view(shape(0), axis);
      int64_t offset = 0;
      for (int64_t sz : sizes) {
        std::vector<float> part;
        for (int64_t o = 0; o < v.outer; ++o) {
          auto begin = in(0).begin() + (o * v.dim + offset) * v.inner;
          part.insert(part.end(), begin, begin + sz * v.inner);
        }
        offset += sz;
        outs.push_back(std::move(part));
      }
      break;
    }
    case OpKind::Flatten:
    case OpKind::Reshape:
      outs.push_back(in(0));
      break;
    case OpKind::QuantizeLinear: {
      auto y = in(0);
      float scale = static_cast<float>(attr_float(n.attrs, "scale"));
      for (float &v : y)
        v = fake_quant(v, scale);
      outs.push_back(std::move(y));
      break;
    }
    case OpKind::DequantizeLinear: {
      auto y = in(0);
      float scale = static_cast<float>(attr_float(n.attrs, "scale"));
      for (float &v : y)
        v = v * scale;
      outs.push_back(std::move(y));
      break;
    }
    }
    for (size_t i = 0; i < n.outputs.size(); ++i) {
      auto spec = g.spec_of(n.outputs[i]);
      if (!spec)
        throw ShapeError("no shape recorded for '" + n.outputs[i] +
                         "'; run infer_shapes first");
      shapes[n.outputs[i]] = spec->shape;
      env[n.outputs[i]] = std::move(outs.at(i));
    }
  }

  if (keep_all)
    return env;
  FloatTensors result;
  for (const auto &s : g.graph_outputs)
    result[s.name] = env.at(s.name);
  return result;
}

std::vector<std::vector<float>> run_fp32(const ModelGraph &g,
                                         const std::vector<float> &input) {
  if (g.graph_inputs.size() != 1)
    throw ShapeError("graph has " + std::to_string(g.graph_inputs.size()) +
                     " inputs, expected exactly one");
  auto env = run_fp32(g, {{g.graph_inputs[0].name, input}});
  std::vector<std::vector<float>> out;
  for (const auto &s : g.graph_outputs)
    out.push_back(std::move(env.at(s.name)));
  return out;
}

} // namespace imce
