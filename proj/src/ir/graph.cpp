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

#include "imce/ir/graph.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "imce/errors.h"

namespace imce {

namespace {

struct KindInfo {
  OpKind kind;
  std::string_view name;
  Arity arity;
};

constexpr std::array<KindInfo, 18> kKinds = {{
    {OpKind::Conv2D, "Conv2D", {2, 3, 1}},
    {OpKind::FusedConvReLU, "FusedConvReLU", {2, 3, 1}},
    {OpKind::FusedConvSiLU, "FusedConvSiLU", {2, 3, 1}},
    {OpKind::MVM, "MVM", {2, 3, 1}},
    {OpKind::Add, "Add", {2, 2, 1}},
    {OpKind::FusedAddReLU, "FusedAddReLU", {2, 2, 1}},
    {OpKind::ReLU, "ReLU", {1, 1, 1}},
    {OpKind::Sigmoid, "Sigmoid", {1, 1, 1}},
    {OpKind::Mul, "Mul", {2, 2, 1}},
    {OpKind::SiLU, "SiLU", {1, 1, 1}},
    {OpKind::MaxPool, "MaxPool", {1, 1, 1}},
    {OpKind::AvgPool, "AvgPool", {1, 1, 1}},
    {OpKind::Concat, "Concat", {1, -1, 1}},
    {OpKind::Split, "Split", {1, 1, -1}},
    {OpKind::Flatten, "Flatten", {1, 1, 1}},
    {OpKind::Reshape, "Reshape", {1, 1, 1}},
    {OpKind::QuantizeLinear, "QuantizeLinear", {1, 1, 1}},
    {OpKind::DequantizeLinear, "DequantizeLinear", {1, 1, 1}},
}};

const KindInfo &info(OpKind k) { return kKinds[static_cast<size_t>(k)]; }

int64_t conv_out_dim(int64_t in, int64_t k, int64_t s, int64_t p) {
  return (in + 2 * p - k) / s + 1;
}

} // namespace

std::string_view to_string(OpKind k) { return info(k).name; }

OpKind op_kind_from_string(std::string_view s) {
  for (const auto &ki : kKinds)
    if (ki.name == s)
      return ki.kind;
  throw ParseError("unknown op kind '" + std::string(s) + "'");
}

const std::vector<OpKind> &all_op_kinds() {
  static const std::vector<OpKind> kinds = [] {
    std::vector<OpKind> v;
    for (const auto &ki : kKinds)
      v.push_back(ki.kind);
    return v;
  }();
  return kinds;
}

Arity arity(OpKind k) { return info(k).arity; }

std::vector<std::string_view> required_attrs(OpKind k) {
  switch (k) {
  case OpKind::Conv2D:
  case OpKind::FusedConvReLU:
  case OpKind::FusedConvSiLU:
    return {"kernel_shape", "strides", "pads"};
  case OpKind::MaxPool:
  case OpKind::AvgPool:
    return {"kernel_shape", "strides"};
  case OpKind::Concat:
    return {"axis"};
  case OpKind::Split:
    return {"axis", "split"};
  case OpKind::Reshape:
    return {"shape"};
  case OpKind::QuantizeLinear:
  case OpKind::DequantizeLinear:
    return {"scale"};
  default:
    return {};
  }
}

bool is_conv_class(OpKind k) {
  return k == OpKind::Conv2D || k == OpKind::FusedConvReLU ||
         k == OpKind::FusedConvSiLU;
}

bool is_add_class(OpKind k) {
  return k == OpKind::Add || k == OpKind::FusedAddReLU;
}

int64_t attr_int(const Attrs &a, const std::string &key) {
  auto it = a.find(key);
  if (it == a.end())
    throw ValidationError(key, "missing attribute '" + key + "'");
  if (const auto *v = std::get_if<int64_t>(&it->second))
    return *v;
  if (const auto *d = std::get_if<double>(&it->second))
    return static_cast<int64_t>(*d);
  throw ValidationError(key, "attribute '" + key + "' is not a scalar");
}

int64_t attr_int(const Attrs &a, const std::string &key, int64_t fallback) {
  return a.count(key) ? attr_int(a, key) : fallback;
}

double attr_float(const Attrs &a, const std::string &key) {
  auto it = a.find(key);
  if (it == a.end())
    throw ValidationError(key, "missing attribute '" + key + "'");
  if (const auto *d = std::get_if<double>(&it->second))
    return *d;
  if (const auto *v = std::get_if<int64_t>(&it->second))
    return static_cast<double>(*v);
  throw ValidationError(key, "attribute '" + key + "' is not a scalar");
}

std::vector<int64_t> attr_ints(const Attrs &a, const std::string &key) {
  auto it = a.find(key);
  if (it == a.end())
    throw ValidationError(key, "missing attribute '" + key + "'");
  if (const auto *v = std::get_if<std::vector<int64_t>>(&it->second))
    return *v;
  if (const auto *s = std::get_if<int64_t>(&it->second))
    return {*s};
  throw ValidationError(key, "attribute '" + key + "' is not an int list");
}

std::vector<int64_t> attr_ints(const Attrs &a, const std::string &key,
                               std::vector<int64_t> fallback) {
  return a.count(key) ? attr_ints(a, key) : fallback;
}

const GraphNode *ModelGraph::find_node(std::string_view id) const {
  for (const auto &n : nodes)
    if (n.id == id)
      return &n;
  return nullptr;
}

GraphNode *ModelGraph::find_node(std::string_view id) {
  for (auto &n : nodes)
    if (n.id == id)
      return &n;
  return nullptr;
}

std::optional<size_t> ModelGraph::producer(std::string_view tensor) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    for (const auto &o : nodes[i].outputs)
      if (o == tensor)
        return i;
  return std::nullopt;
}

std::vector<size_t> ModelGraph::consumers(std::string_view tensor) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (std::find(nodes[i].inputs.begin(), nodes[i].inputs.end(), tensor) !=
        nodes[i].inputs.end())
      out.push_back(i);
  return out;
}

bool ModelGraph::is_graph_input(std::string_view tensor) const {
  return std::any_of(graph_inputs.begin(), graph_inputs.end(),
                     [&](const TensorSpec &s) { return s.name == tensor; });
}

bool ModelGraph::is_graph_output(std::string_view tensor) const {
  return std::any_of(graph_outputs.begin(), graph_outputs.end(),
                     [&](const TensorSpec &s) { return s.name == tensor; });
}

std::optional<TensorSpec> ModelGraph::spec_of(std::string_view tensor) const {
  std::string key(tensor);
  if (auto it = initializers.find(key); it != initializers.end())
    return it->second.spec();
  for (const auto &s : graph_inputs)
    if (s.name == tensor)
      return s;
  if (auto it = value_info.find(key); it != value_info.end())
    return it->second;
  for (const auto &s : graph_outputs)
    if (s.name == tensor)
      return s;
  return std::nullopt;
}

std::optional<QuantParams> ModelGraph::quant_of(std::string_view tensor) const {
  std::string key(tensor);
  for (const auto &n : nodes)
    if (auto it = n.quant.find(key); it != n.quant.end())
      return it->second;
  return std::nullopt;
}

void validate(const ModelGraph &g) {
  std::unordered_set<std::string> ids;
  std::unordered_map<std::string, std::string> producers;
  for (const auto &s : g.graph_inputs) {
    if (s.shape.empty() || s.shape.size() > 4 ||
        std::any_of(s.shape.begin(), s.shape.end(),
                    [](int64_t d) { return d < 1; }))
      throw ValidationError(s.name, "graph input '" + s.name +
                                        "' has invalid shape " +
                                        shape_str(s.shape));
    if (!producers.emplace(s.name, "<graph input>").second)
      throw ValidationError(s.name, "tensor '" + s.name + "' defined twice");
  }
  for (const auto &[name, v] : g.initializers)
    if (!producers.emplace(name, "<initializer>").second)
      throw ValidationError(name, "tensor '" + name +
                                      "' is both a graph input and an "
                                      "initializer");

  for (const auto &n : g.nodes) {
    if (n.id.empty())
      throw ValidationError("", "node with empty id");
    if (!ids.insert(n.id).second)
      throw ValidationError(n.id, "duplicate node id '" + n.id + "'");
    Arity a = arity(n.kind);
    int nin = static_cast<int>(n.inputs.size());
    if (nin < a.min_inputs || (a.max_inputs >= 0 && nin > a.max_inputs))
      throw ValidationError(n.id, "node '" + n.id + "' (" +
                                      std::string(to_string(n.kind)) +
                                      ") has " + std::to_string(nin) +
                                      " inputs");
    for (auto attr : required_attrs(n.kind))
      if (!n.attrs.count(std::string(attr)))
        throw ValidationError(n.id, "node '" + n.id +
                                        "' is missing attribute '" +
                                        std::string(attr) + "'");
    int expected_out = a.outputs;
    if (expected_out < 0)
      expected_out = static_cast<int>(attr_ints(n.attrs, "split").size());
    if (static_cast<int>(n.outputs.size()) != expected_out)
      throw ValidationError(n.id, "node '" + n.id + "' has " +
                                      std::to_string(n.outputs.size()) +
                                      " outputs, expected " +
                                      std::to_string(expected_out));
    for (const auto &o : n.outputs) {
      if (o.empty())
        throw ValidationError(n.id, "node '" + n.id + "' has an unnamed output");
      auto [it, fresh] = producers.emplace(o, n.id);
      if (!fresh)
        throw ValidationError(o, "tensor '" + o + "' produced by both '" +
                                     it->second + "' and '" + n.id + "'");
    }
  }
  for (const auto &n : g.nodes)
    for (const auto &in : n.inputs)
      if (!producers.count(in))
        throw ValidationError(in, "node '" + n.id +
                                      "' consumes undefined tensor '" + in +
                                      "'");
  for (const auto &s : g.graph_outputs) {
    auto it = producers.find(s.name);
    if (it == producers.end() || it->second.front() == '<')
      throw ValidationError(s.name, "graph output '" + s.name +
                                        "' is not produced by any node");
  }
  for (const auto &n : g.nodes)
    for (const auto &[t, q] : n.quant)
      if (!(q.scale > 0.0f) || !std::isfinite(q.scale) || q.zero_point != 0)
        throw ValidationError(t, "tensor '" + t +
                                     "' has invalid quantization parameters");
  // Throws CycleError when a cycle exists.
  topological_order(g);
}

std::vector<std::string> topological_order(const ModelGraph &g) {
  const size_t n = g.nodes.size();
  std::unordered_map<std::string, size_t> producer_of;
  for (size_t i = 0; i < n; ++i)
    for (const auto &o : g.nodes[i].outputs)
      producer_of.emplace(o, i);

  std::vector<std::set<size_t>> succ(n);
  std::vector<size_t> indeg(n, 0);
  for (size_t j = 0; j < n; ++j) {
    std::set<size_t> preds;
    for (const auto &in : g.nodes[j].inputs)
      if (auto it = producer_of.find(in); it != producer_of.end())
        preds.insert(it->second);
    for (size_t i : preds) {
      succ[i].insert(j);
      ++indeg[j];
    }
  }

  auto by_id = [&](size_t a, size_t b) { return g.nodes[a].id > g.nodes[b].id; };
  std::priority_queue<size_t, std::vector<size_t>, decltype(by_id)> ready(by_id);
  for (size_t i = 0; i < n; ++i)
    if (indeg[i] == 0)
      ready.push(i);

  std::vector<std::string> order;
  order.reserve(n);
  while (!ready.empty()) {
    size_t i = ready.top();
    ready.pop();
    order.push_back(g.nodes[i].id);
    for (size_t j : succ[i])
      if (--indeg[j] == 0)
        ready.push(j);
  }
  if (order.size() != n) {
    for (size_t i = 0; i < n; ++i)
      if (indeg[i] != 0)
        throw CycleError(g.nodes[i].id,
                         "cycle through node '" + g.nodes[i].id + "'");
  }
  return order;
}

Adjacency::Adjacency(std::vector<std::string> ids)
    : ids_(std::move(ids)), bits_(ids_.size() * ids_.size(), 0) {}

size_t Adjacency::index_of(std::string_view id) const {
  for (size_t i = 0; i < ids_.size(); ++i)
    if (ids_[i] == id)
      return i;
  throw ValidationError(std::string(id), "unknown node '" + std::string(id) + "'");
}

std::vector<std::pair<size_t, size_t>> Adjacency::edges() const {
  std::vector<std::pair<size_t, size_t>> out;
  for (size_t i = 0; i < ids_.size(); ++i)
    for (size_t j = 0; j < ids_.size(); ++j)
      if (at(i, j))
        out.emplace_back(i, j);
  return out;
}

Adjacency adjacency(const ModelGraph &g) {
  auto order = topological_order(g);
  std::unordered_map<std::string, size_t> pos;
  for (size_t i = 0; i < order.size(); ++i)
    pos[order[i]] = i;
  std::unordered_map<std::string, size_t> producer_pos;
  for (const auto &n : g.nodes)
    for (const auto &o : n.outputs)
      producer_pos[o] = pos[n.id];

  Adjacency adj(order);
  for (const auto &n : g.nodes)
    for (const auto &in : n.inputs)
      if (auto it = producer_pos.find(in); it != producer_pos.end())
        adj.set(it->second, pos[n.id]);
  return adj;
}

void infer_shapes(ModelGraph &g) {
  std::map<std::string, TensorSpec> known;
  for (const auto &s : g.graph_inputs)
    known[s.name] = s;
  for (const auto &[name, v] : g.initializers)
    known[name] = v.spec();

  auto get = [&](const GraphNode &n, size_t idx) -> const TensorSpec & {
    auto it = known.find(n.inputs.at(idx));
    if (it == known.end())
      throw ShapeError("node '" + n.id + "': shape of '" + n.inputs[idx] +
                       "' is unknown");
    return it->second;
  };
  auto fail = [](const GraphNode &n, const std::string &why) {
    return ShapeError("node '" + n.id + "' (" + std::string(to_string(n.kind)) +
                      "): " + why);
  };

  g.value_info.clear();
  for (const auto &id : topological_order(g)) {
    const GraphNode &n = *g.find_node(id);
    std::vector<Shape> outs;
    switch (n.kind) {
    case OpKind::Conv2D:
    case OpKind::FusedConvReLU:
    case OpKind::FusedConvSiLU: {
      const Shape &x = get(n, 0).shape;
      const Shape &w = get(n, 1).shape;
      if (x.size() != 4 || x[0] != 1)
        throw fail(n, "input must be [1,C,H,W], got " + shape_str(x));
      if (w.size() != 4)
        throw fail(n, "weights must be 4-D, got " + shape_str(w));
      auto k = attr_ints(n.attrs, "kernel_shape");
      auto s = attr_ints(n.attrs, "strides");
      auto p = attr_ints(n.attrs, "pads");
      int64_t group = attr_int(n.attrs, "group", 1);
      if (k.size() != 2 || s.size() != 2 || p.size() != 2 || s[0] < 1 ||
          s[1] < 1 || p[0] < 0 || p[1] < 0 || group < 1)
        throw fail(n, "bad kernel/stride/pad attributes");
      if (w[2] != k[0] || w[3] != k[1] || x[1] % group != 0 ||
          w[0] % group != 0 || w[1] * group != x[1])
        throw fail(n, "weights " + shape_str(w) + " do not match input " +
                          shape_str(x));
      if (n.inputs.size() == 3 && get(n, 2).shape != Shape{w[0]})
        throw fail(n, "bias shape mismatch");
      int64_t oh = conv_out_dim(x[2], k[0], s[0], p[0]);
      int64_t ow = conv_out_dim(x[3], k[1], s[1], p[1]);
      if (oh < 1 || ow < 1)
        throw fail(n, "kernel larger than padded input");
      outs.push_back({1, w[0], oh, ow});
      break;
    }
    case OpKind::MVM: {
      const TensorSpec &x = get(n, 0);
      const Shape &w = get(n, 1).shape;
      if (w.size() != 2 || w[1] != x.num_elements())
        throw fail(n, "weights " + shape_str(w) + " do not match input of " +
                          std::to_string(x.num_elements()) + " elements");
      if (n.inputs.size() == 3 && get(n, 2).shape != Shape{w[0]})
        throw fail(n, "bias shape mismatch");
      outs.push_back({1, w[0]});
      break;
    }
    case OpKind::Add:
    case OpKind::FusedAddReLU:
    case OpKind::Mul: {
      if (get(n, 0).shape != get(n, 1).shape)
        throw fail(n, "operand shapes differ: " + shape_str(get(n, 0).shape) +
                          " vs " + shape_str(get(n, 1).shape));
      outs.push_back(get(n, 0).shape);
      break;
    }
    case OpKind::ReLU:
    case OpKind::Sigmoid:
    case OpKind::SiLU:
    case OpKind::QuantizeLinear:
    case OpKind::DequantizeLinear:
      outs.push_back(get(n, 0).shape);
      break;
    case OpKind::MaxPool:
    case OpKind::AvgPool: {
      const Shape &x = get(n, 0).shape;
      if (x.size() != 4 || x[0] != 1)
        throw fail(n, "input must be [1,C,H,W], got " + shape_str(x));
      auto k = attr_ints(n.attrs, "kernel_shape");
      auto s = attr_ints(n.attrs, "strides");
      auto p = attr_ints(n.attrs, "pads", {0, 0});
      if (k.size() != 2 || s.size() != 2 || p.size() != 2 || k[0] < 1 ||
          k[1] < 1 || s[0] < 1 || s[1] < 1)
        throw fail(n, "bad pooling attributes");
      int64_t oh = conv_out_dim(x[2], k[0], s[0], p[0]);
      int64_t ow = conv_out_dim(x[3], k[1], s[1], p[1]);
      if (oh < 1 || ow < 1)
        throw fail(n, "window larger than padded input");
      outs.push_back({1, x[1], oh, ow});
      break;
    }
    case OpKind::Concat: {
      int64_t axis = attr_int(n.attrs, "axis");
      Shape out = get(n, 0).shape;
      if (axis < 0 || axis >= static_cast<int64_t>(out.size()))
        throw fail(n, "axis out of range");
      for (size_t i = 1; i < n.inputs.size(); ++i) {
        const Shape &s = get(n, i).shape;
        if (s.size() != out.size())
          throw fail(n, "rank mismatch");
        for (size_t d = 0; d < s.size(); ++d)
          if (static_cast<int64_t>(d) != axis && s[d] != out[d])
            throw fail(n, "non-axis dims differ");
        out[axis] += s[axis];
      }
      outs.push_back(out);
      break;
    }
    case OpKind::Split: {
      int64_t axis = attr_int(n.attrs, "axis");
      auto sizes = attr_ints(n.attrs, "split");
      const Shape &x = get(n, 0).shape;
      if (axis < 0 || axis >= static_cast<int64_t>(x.size()))
        throw fail(n, "axis out of range");
      int64_t total = 0;
      for (int64_t s : sizes) {
        if (s < 1)
          throw fail(n, "split sizes must be positive");
        total += s;
        Shape part = x;
        part[axis] = s;
        outs.push_back(part);
      }
      if (total != x[axis])
        throw fail(n, "split sizes sum to " + std::to_string(total) +
                          ", dim is " + std::to_string(x[axis]));
      break;
    }
    case OpKind::Flatten: {
      const Shape &x = get(n, 0).shape;
      outs.push_back({1, num_elements(x)});
      break;
    }
    case OpKind::Reshape: {
      Shape target = attr_ints(n.attrs, "shape");
      if (num_elements(target) != get(n, 0).num_elements())
        throw fail(n, "cannot reshape " + shape_str(get(n, 0).shape) +
                          " to " + shape_str(target));
      outs.push_back(target);
      break;
    }
    }
    for (size_t i = 0; i < n.outputs.size(); ++i) {
      TensorSpec spec{n.outputs[i], outs.at(i), DType::FP32};
      known[spec.name] = spec;
      g.value_info[spec.name] = spec;
    }
  }
  for (auto &s : g.graph_outputs) {
    auto it = known.find(s.name);
    if (it == known.end())
      throw ShapeError("graph output '" + s.name + "' has no shape");
    s.shape = it->second.shape;
  }
}

} // namespace imce
