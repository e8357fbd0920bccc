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

// Independent reference implementations and instance generators shared by
// the unit and acceptance suites. Nothing here calls the kernels it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "imce/compiler/compiled_model.h"
#include "imce/compiler/passes.h"
#include "imce/ir/graph.h"
#include "imce/kernels/an.h"
#include "imce/mapper/hw_info.h"
#include "imce/zoo/models.h"

namespace imce::oracle {

inline int64_t rand_int(std::mt19937_64 &rng, int64_t lo, int64_t hi) {
  return lo + static_cast<int64_t>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

inline int8_t rand_code(std::mt19937_64 &rng) {
  return static_cast<int8_t>(rand_int(rng, -127, 127));
}

inline std::vector<int8_t> rand_codes(std::mt19937_64 &rng, size_t n) {
  std::vector<int8_t> v(n);
  for (auto &x : v)
    x = rand_code(rng);
  return v;
}

/// Round half away from zero through floor on the magnitude, then saturate.
inline int8_t round_sat(double v) {
  double r = v < 0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5);
  if (r > 127)
    r = 127;
  if (r < -127)
    r = -127;
  return static_cast<int8_t>(r);
}

/// Requantization of an exact accumulator with the FP32 multiplier rule.
inline int8_t requant(int64_t acc, float in_scale, float w_scale, float out_scale) {
  const float acc_scale = in_scale * w_scale;
  const float m = acc_scale / out_scale;
  const float v = static_cast<float>(acc) * m;
  return round_sat(static_cast<double>(v));
}

/// y_j = requant(sum_i x_i w_ij), W in engine layout (rows = inputs).
inline std::vector<int8_t> mvm(const std::vector<int8_t> &w, int64_t rows,
                               int64_t cols, const std::vector<int8_t> &x,
                               float in_scale, float w_scale, float out_scale) {
  std::vector<int8_t> y(static_cast<size_t>(cols));
  for (int64_t j = 0; j < cols; ++j) {
    int64_t acc = 0;
    for (int64_t i = 0; i < rows; ++i)
      acc += static_cast<int64_t>(x[i]) * w[i * cols + j];
    y[j] = requant(acc, in_scale, w_scale, out_scale);
  }
  return y;
}

/// Direct convolution over a compiled conv node (weights2d: rows = output
/// channels, cols = channel-major receptive field), NCHW in and out.
inline std::vector<int8_t> conv(const CompiledNode &n, const std::vector<int8_t> &x,
                                bool relu) {
  const auto &in = n.in_specs[0].shape;
  const int64_t C = in[1], H = in[2], W = in[3];
  const auto k = attr_ints(n.node.attrs, "kernel_shape");
  const auto s = attr_ints(n.node.attrs, "strides");
  const auto p = attr_ints(n.node.attrs, "pads");
  const int64_t OH = (H + 2 * p[0] - k[0]) / s[0] + 1;
  const int64_t OW = (W + 2 * p[1] - k[1]) / s[1] + 1;
  const int64_t O = n.out_specs[0].shape[1];
  const auto &w = *n.weights2d;
  std::vector<int8_t> y(static_cast<size_t>(O * OH * OW));
  for (int64_t o = 0; o < O; ++o)
    for (int64_t oy = 0; oy < OH; ++oy)
      for (int64_t ox = 0; ox < OW; ++ox) {
        int64_t acc = n.bias.empty() ? 0 : n.bias[o];
        for (int64_t c = 0; c < C; ++c)
          for (int64_t ky = 0; ky < k[0]; ++ky)
            for (int64_t kx = 0; kx < k[1]; ++kx) {
              const int64_t iy = oy * s[0] - p[0] + ky, ix = ox * s[1] - p[1] + kx;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W)
                continue;
              acc += static_cast<int64_t>(w.at(o, (c * k[0] + ky) * k[1] + kx)) *
                     x[(c * H + iy) * W + ix];
            }
        int8_t v = requant(acc, n.in_scales[0].scale, n.weight_scale.scale,
                           n.out_scales[0].scale);
        if (relu && v < 0)
          v = 0;
        y[(o * OH + oy) * OW + ox] = v;
      }
  return y;
}

inline float rand_scale(std::mt19937_64 &rng, double lo, double hi) {
  return static_cast<float>(lo * std::pow(hi / lo, uniform01(rng)));
}

/// A random Conv2D compiled node with consistent specs and scales.
inline CompiledNode make_conv_node(std::mt19937_64 &rng, int64_t C, int64_t H,
                                   int64_t W, int64_t O, int64_t kh, int64_t kw,
                                   int64_t stride, int64_t pad,
                                   OpKind kind = OpKind::Conv2D) {
  CompiledNode n;
  n.node.id = "conv";
  n.node.kind = kind;
  n.node.inputs = {"x", "conv.w"};
  n.node.outputs = {"y"};
  n.node.attrs["kernel_shape"] = std::vector<int64_t>{kh, kw};
  n.node.attrs["strides"] = std::vector<int64_t>{stride, stride};
  n.node.attrs["pads"] = std::vector<int64_t>{pad, pad};
  const int64_t OH = (H + 2 * pad - kh) / stride + 1;
  const int64_t OW = (W + 2 * pad - kw) / stride + 1;
  Int8Matrix w(round_up16(O), round_up16(C * kh * kw));
  for (int64_t o = 0; o < O; ++o)
    for (int64_t c = 0; c < C * kh * kw; ++c)
      w.at(o, c) = rand_code(rng);
  n.weights2d = w;
  n.bias.resize(static_cast<size_t>(O));
  for (auto &b : n.bias)
    b = static_cast<int32_t>(rand_int(rng, -20000, 20000));
  n.weight_scale = QuantParams{rand_scale(rng, 1e-3, 2e-2), 0};
  n.in_scales = {QuantParams{rand_scale(rng, 1e-3, 5e-2), 0}};
  // Output scale near the accumulator range so results are not all saturated.
  const double fan = static_cast<double>(C * kh * kw);
  n.out_scales = {QuantParams{static_cast<float>(n.in_scales[0].scale *
                                                 n.weight_scale.scale * 127.0 *
                                                 std::sqrt(fan) * 0.5),
                              0}};
  n.in_specs = {TensorSpec{"x", {1, C, H, W}, DType::INT8}};
  n.out_specs = {TensorSpec{"y", {1, O, OH, OW}, DType::INT8}};
  return n;
}

/// Uniform [-1, 1) FP32 calibration samples for every graph input.
inline CalibrationSet uniform_calibration(const ModelGraph &g, int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  CalibrationSet cal;
  for (int i = 0; i < n; ++i) {
    std::vector<TensorValue> s;
    for (const auto &in : g.graph_inputs) {
      std::vector<float> v(static_cast<size_t>(num_elements(in.shape)));
      for (auto &x : v)
        x = static_cast<float>(2 * uniform01(rng) - 1);
      s.push_back(TensorValue::fp32(in.name, in.shape, v));
    }
    cal.samples.push_back(std::move(s));
  }
  return cal;
}

/// Random INT8 request batch for a compiled model.
inline std::vector<std::vector<std::vector<int8_t>>>
random_requests(std::mt19937_64 &rng, const CompiledModel &cm, size_t n) {
  std::vector<std::vector<std::vector<int8_t>>> reqs(n);
  for (auto &r : reqs)
    for (const auto &in : cm.inputs)
      r.push_back(rand_codes(rng, static_cast<size_t>(in.num_elements())));
  return reqs;
}

// ---------------------------------------------------------------------------
// Random graphs for the compiler semantics property.

/// Random DAG of at most `max_nodes` nodes over the supported FP32 operator
/// set, biased towards chains so fusion patterns occur.
inline ModelGraph random_graph(std::mt19937_64 &rng, int max_nodes,
                               const std::string &name = "random") {
  GraphBuilder b(name, rng());
  struct T {
    std::string name;
    int consumers = 0;
  };
  std::vector<T> pool;
  pool.push_back({b.input("x", {1, 4, 8, 8})});
  int nodes = 0;
  auto pick = [&]() -> std::string & {
    if (uniform01(rng) < 0.6)
      return pool.back().name;
    return pool[static_cast<size_t>(rand_int(rng, 0, pool.size() - 1))].name;
  };
  auto use = [&](const std::string &t) {
    for (auto &p : pool)
      if (p.name == t)
        ++p.consumers;
  };
  auto push = [&](const std::string &t) { pool.push_back({t}); };
  std::vector<std::string> heads;
  while (nodes < max_nodes) {
    const int op = static_cast<int>(rand_int(rng, 0, 11));
    std::string x = pick();
    const Shape sx = b.shape(x);
    const int64_t C = sx[1], H = sx[2];
    if (op <= 2) {
      const int64_t k = uniform01(rng) < 0.5 ? 1 : 3;
      const int64_t cout = uniform01(rng) < 0.5 ? 4 : 8;
      push(b.conv(x, cout, k, 1, k / 2));
      use(x);
      ++nodes;
    } else if (op <= 4) {
      push(b.unary(OpKind::ReLU, x));
      use(x);
      ++nodes;
    } else if (op == 5 && nodes + 2 <= max_nodes) {
      push(b.silu_pattern(x));
      use(x);
      use(x);
      nodes += 2;
    } else if (op == 6) {
      // A tensor of identical shape for Add / Mul.
      std::vector<std::string> same;
      for (const auto &p : pool)
        if (p.name != x && b.shape(p.name) == sx)
          same.push_back(p.name);
      if (same.empty())
        continue;
      const std::string y = same[static_cast<size_t>(rand_int(rng, 0, same.size() - 1))];
      push(uniform01(rng) < 0.75 ? b.add(x, y) : b.mul(x, y));
      use(x);
      use(y);
      ++nodes;
    } else if (op == 7) {
      push(b.unary(uniform01(rng) < 0.5 ? OpKind::Sigmoid : OpKind::SiLU, x));
      use(x);
      ++nodes;
    } else if (op == 8 && H >= 4) {
      push(b.pool(uniform01(rng) < 0.5 ? OpKind::MaxPool : OpKind::AvgPool, x, 2, 2));
      use(x);
      ++nodes;
    } else if (op == 9) {
      std::vector<std::string> same_hw;
      for (const auto &p : pool)
        if (b.shape(p.name)[2] == H && b.shape(p.name)[3] == sx[3])
          same_hw.push_back(p.name);
      const std::string y =
          same_hw[static_cast<size_t>(rand_int(rng, 0, same_hw.size() - 1))];
      push(b.concat({x, y}, 1));
      use(x);
      use(y);
      ++nodes;
    } else if (op == 10 && C % 2 == 0) {
      auto parts = b.split(x, 1, {C / 2, C / 2});
      use(x);
      for (auto &p : parts)
        push(p);
      ++nodes;
    } else if (op == 11 && nodes + 2 <= max_nodes && nodes >= max_nodes - 3) {
      // Rank-2 result: a graph output, never an operand of later 4-D ops.
      heads.push_back(b.mvm(b.flatten(x), 10));
      use(x);
      nodes += 2;
    }
  }
  // Dangling tensors become graph outputs.
  for (const auto &p : pool)
    if (p.consumers == 0 && p.name != "x")
      b.output(p.name);
  for (const auto &h : heads)
    b.output(h);
  return b.build();
}

/// Fusion sites predicted from the pattern rules alone: (anchor node id,
/// fused kind). `g` must already be optimized.
inline std::set<std::pair<std::string, OpKind>> expected_fusions(const ModelGraph &g) {
  std::map<std::string, std::vector<const GraphNode *>> consumers;
  for (const auto &n : g.nodes)
    for (const auto &t : std::set<std::string>(n.inputs.begin(), n.inputs.end()))
      consumers[t].push_back(&n);
  auto uses = [](const GraphNode &n, const std::string &t) {
    return std::count(n.inputs.begin(), n.inputs.end(), t);
  };
  auto single = [&](const std::string &t) -> const GraphNode * {
    if (g.is_graph_output(t))
      return nullptr;
    auto it = consumers.find(t);
    if (it == consumers.end() || it->second.size() != 1 || uses(*it->second[0], t) != 1)
      return nullptr;
    return it->second[0];
  };
  std::set<std::pair<std::string, OpKind>> sites;
  std::set<const GraphNode *> silu_mul; // Mul nodes absorbed into SiLU
  std::map<const GraphNode *, const GraphNode *> silu_of_input; // x -> sigmoid
  for (const auto &n : g.nodes) {
    if (n.kind != OpKind::Sigmoid)
      continue;
    const GraphNode *m = single(n.outputs[0]);
    if (!m || m->kind != OpKind::Mul)
      continue;
    const std::string &other = m->inputs[0] == n.outputs[0] ? m->inputs[1] : m->inputs[0];
    if (other != n.inputs[0])
      continue;
    sites.insert({n.id, OpKind::SiLU});
    silu_mul.insert(m);
  }
  // Consumers after the SiLU rewrite: the absorbed Mul no longer reads x.
  auto effective = [&](const std::string &t) -> const GraphNode * {
    if (g.is_graph_output(t))
      return nullptr;
    std::vector<const GraphNode *> cs;
    for (const auto *c : consumers[t])
      if (!silu_mul.count(c))
        cs.push_back(c);
    if (cs.size() != 1 || uses(*cs[0], t) != 1)
      return nullptr;
    return cs[0];
  };
  for (const auto &n : g.nodes) {
    if (n.kind != OpKind::Conv2D && n.kind != OpKind::Add)
      continue;
    const GraphNode *c = effective(n.outputs[0]);
    if (!c)
      continue;
    const bool is_silu = c->kind == OpKind::SiLU || sites.count({c->id, OpKind::SiLU});
    if (n.kind == OpKind::Conv2D && c->kind == OpKind::ReLU)
      sites.insert({n.id, OpKind::FusedConvReLU});
    else if (n.kind == OpKind::Conv2D && is_silu)
      sites.insert({n.id, OpKind::FusedConvSiLU});
    else if (n.kind == OpKind::Add && c->kind == OpKind::ReLU)
      sites.insert({n.id, OpKind::FusedAddReLU});
  }
  // A SiLU that became a conv epilogue is not a standalone node.
  for (auto it = sites.begin(); it != sites.end();) {
    bool absorbed = false;
    if (it->second == OpKind::SiLU)
      for (const auto &n : g.nodes)
        if (n.kind == OpKind::Conv2D && sites.count({n.id, OpKind::FusedConvSiLU}) &&
            effective(n.outputs[0]) && effective(n.outputs[0])->id == it->first)
          absorbed = true;
    it = absorbed ? sites.erase(it) : std::next(it);
  }
  return sites;
}

// ---------------------------------------------------------------------------
// Mapper instances.

/// Synthetic compiled model: `n` nodes with random classes, cost hints and
/// forward edges (i < j), one output tensor per node.
inline CompiledModel random_compiled_model(std::mt19937_64 &rng, int n, double edge_p) {
  CompiledModel cm;
  cm.name = "synthetic";
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "n%02d", i);
    ids.push_back(buf);
  }
  for (int i = 0; i < n; ++i) {
    CompiledNode c;
    c.node.id = ids[i];
    c.node.kind = OpKind::Conv2D;
    c.node.outputs = {ids[i] + ".y"};
    c.accel = uniform01(rng) < 0.65 ? AccelClass::An : AccelClass::Di;
    c.cost_hint_us = static_cast<double>(rand_int(rng, 1, 50));
    cm.nodes.push_back(std::move(c));
  }
  cm.adjacency = Adjacency(ids);
  for (int j = 1; j < n; ++j) {
    bool has_pred = false;
    for (int i = 0; i < j; ++i)
      if (uniform01(rng) < edge_p) {
        cm.adjacency.set(i, j);
        cm.nodes[j].node.inputs.push_back(ids[i] + ".y");
        has_pred = true;
      }
    if (!has_pred) {
      const int i = static_cast<int>(rand_int(rng, 0, j - 1));
      cm.adjacency.set(i, j);
      cm.nodes[j].node.inputs.push_back(ids[i] + ".y");
    }
  }
  return cm;
}

inline HwInfo random_hw(std::mt19937_64 &rng, int max_an, int max_di, int max_f,
                        int max_s) {
  HwInfo hw;
  const int na = static_cast<int>(rand_int(rng, 1, max_an));
  const int nd = static_cast<int>(rand_int(rng, 1, max_di));
  for (int i = 0; i < na + nd; ++i)
    hw.boards.push_back(BoardInfo{i, i < na ? AccelClass::An : AccelClass::Di, "",
                                  static_cast<int>(rand_int(rng, 1, max_f)),
                                  static_cast<int>(rand_int(rng, 1, max_s))});
  return hw;
}

/// Minimum inter-board edge count over every valid assignment (class,
/// F-thread and S-thread limits), or nullopt when none exists.
inline std::optional<size_t> exhaustive_min_cut(const CompiledModel &cm, const HwInfo &hw) {
  const size_t n = cm.nodes.size();
  const auto edges = cm.adjacency.edges();
  std::vector<std::vector<int>> options(n);
  for (size_t i = 0; i < n; ++i)
    for (size_t b = 0; b < hw.boards.size(); ++b)
      if (hw.boards[b].accel == cm.nodes[i].accel)
        options[i].push_back(static_cast<int>(b));
  std::vector<int> a(n, -1), fthreads(hw.boards.size(), 0);
  std::optional<size_t> best;
  std::function<void(size_t)> rec = [&](size_t i) {
    if (i == n) {
      std::vector<int> s(hw.boards.size(), 0);
      size_t cut = 0;
      for (auto [x, y] : edges)
        if (a[x] != a[y]) {
          ++cut;
          ++s[a[x]];
          ++s[a[y]];
        }
      for (size_t b = 0; b < hw.boards.size(); ++b)
        if (s[b] > hw.boards[b].max_sthreads)
          return;
      if (!best || cut < *best)
        best = cut;
      return;
    }
    for (int b : options[i]) {
      if (fthreads[b] >= hw.boards[b].max_fthreads)
        continue;
      ++fthreads[b];
      a[i] = b;
      rec(i + 1);
      --fthreads[b];
    }
  };
  rec(0);
  return best;
}

} // namespace imce::oracle
