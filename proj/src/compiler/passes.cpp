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

#include "imce/compiler/passes.h"

#include <algorithm>
#include <set>

#include "imce/compiler/reference.h"
#include "imce/errors.h"

namespace imce {

namespace {

void replace_uses(ModelGraph &g, const std::string &from, const std::string &to) {
  for (auto &n : g.nodes)
    for (auto &in : n.inputs)
      if (in == from)
        in = to;
}

// Node consuming `t` when it is the only consumer and uses `t` once; `t`
// must not be observable as a graph output.
std::optional<size_t> sole_consumer(const ModelGraph &g, const std::string &t) {
  if (g.is_graph_output(t))
    return std::nullopt;
  auto cs = g.consumers(t);
  if (cs.size() != 1)
    return std::nullopt;
  const auto &ins = g.nodes[cs[0]].inputs;
  if (std::count(ins.begin(), ins.end(), t) != 1)
    return std::nullopt;
  return cs[0];
}

void merge_quant(GraphNode &into, const GraphNode &from) {
  for (const auto &[t, q] : from.quant)
    into.quant.emplace(t, q);
}

// Replaces nodes[anchor] by `fused` and erases nodes[other].
void splice(ModelGraph &g, size_t anchor, size_t other, GraphNode fused) {
  merge_quant(fused, g.nodes[other]);
  g.nodes[anchor] = std::move(fused);
  g.nodes.erase(g.nodes.begin() + static_cast<std::ptrdiff_t>(other));
}

bool fold_one_constant(ModelGraph &g) {
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode &n = g.nodes[i];
    bool all_const = std::all_of(n.inputs.begin(), n.inputs.end(),
                                 [&](const std::string &t) {
                                   return g.is_initializer(t);
                                 });
    bool observable = std::any_of(
        n.outputs.begin(), n.outputs.end(),
        [&](const std::string &t) { return g.is_graph_output(t); });
    if (!all_const || observable)
      continue;

    ModelGraph single;
    single.nodes.push_back(n);
    for (const auto &t : n.inputs)
      single.initializers.emplace(t, g.initializers.at(t));
    for (const auto &o : n.outputs)
      single.graph_outputs.push_back(*g.spec_of(o));
    infer_shapes(single);
    auto values = run_fp32(single, FloatTensors{});
    for (const auto &o : n.outputs) {
      TensorSpec spec = *single.spec_of(o);
      spec.dtype = DType::FP32;
      g.initializers.emplace(o, TensorValue(spec, std::move(values.at(o))));
    }
    g.nodes.erase(g.nodes.begin() + static_cast<std::ptrdiff_t>(i));
    return true;
  }
  return false;
}

bool drop_one_view(ModelGraph &g) {
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode &n = g.nodes[i];
    if (n.kind != OpKind::Flatten && n.kind != OpKind::Reshape)
      continue;
    const std::string x = n.inputs[0], y = n.outputs[0];
    if (g.is_graph_output(y)) {
      if (g.is_graph_output(x) || g.is_graph_input(x) || g.is_initializer(x))
        continue;
      for (auto &s : g.graph_outputs)
        if (s.name == y)
          s = TensorSpec{x, g.spec_of(x)->shape, s.dtype};
    }
    replace_uses(g, y, x);
    g.nodes.erase(g.nodes.begin() + static_cast<std::ptrdiff_t>(i));
    return true;
  }
  return false;
}

} // namespace

ModelGraph optimize(const ModelGraph &g) {
  ModelGraph out = g;
  infer_shapes(out);
  while (drop_one_view(out)) {
  }
  while (fold_one_constant(out)) {
  }
  // Initializers orphaned by folding are dropped.
  std::set<std::string> used;
  for (const auto &n : out.nodes)
    used.insert(n.inputs.begin(), n.inputs.end());
  std::erase_if(out.initializers,
                [&](const auto &kv) { return !used.count(kv.first); });
  infer_shapes(out);
  return out;
}

ModelGraph fuse(const ModelGraph &g) {
  ModelGraph out = g;

  // Mul(x, Sigmoid(x)) -> SiLU(x)
  for (bool changed = true; changed;) {
    changed = false;
    for (size_t i = 0; i < out.nodes.size() && !changed; ++i) {
      if (out.nodes[i].kind != OpKind::Sigmoid)
        continue;
      const std::string x = out.nodes[i].inputs[0];
      const std::string s = out.nodes[i].outputs[0];
      auto m = sole_consumer(out, s);
      if (!m || out.nodes[*m].kind != OpKind::Mul)
        continue;
      const auto &mi = out.nodes[*m].inputs;
      const std::string &other = mi[0] == s ? mi[1] : mi[0];
      if (other != x)
        continue;
      GraphNode silu{out.nodes[i].id, OpKind::SiLU, {x},
                     out.nodes[*m].outputs, {}, out.nodes[i].quant};
      splice(out, i, *m, std::move(silu));
      changed = true;
    }
  }

  // Conv2D -> {ReLU, SiLU} and Add -> ReLU
  for (bool changed = true; changed;) {
    changed = false;
    for (size_t i = 0; i < out.nodes.size() && !changed; ++i) {
      const GraphNode &n = out.nodes[i];
      if (n.kind != OpKind::Conv2D && n.kind != OpKind::Add)
        continue;
      auto c = sole_consumer(out, n.outputs[0]);
      if (!c)
        continue;
      OpKind next = out.nodes[*c].kind;
      OpKind fused_kind;
      if (n.kind == OpKind::Conv2D && next == OpKind::ReLU)
        fused_kind = OpKind::FusedConvReLU;
      else if (n.kind == OpKind::Conv2D && next == OpKind::SiLU)
        fused_kind = OpKind::FusedConvSiLU;
      else if (n.kind == OpKind::Add && next == OpKind::ReLU)
        fused_kind = OpKind::FusedAddReLU;
      else
        continue;
      GraphNode fused = n;
      fused.kind = fused_kind;
      fused.outputs = out.nodes[*c].outputs;
      // The intermediate tensor disappears with its parameters.
      fused.quant.erase(n.outputs[0]);
      GraphNode consumer = out.nodes[*c];
      consumer.quant.erase(n.outputs[0]);
      out.nodes[*c] = consumer;
      splice(out, i, *c, std::move(fused));
      changed = true;
    }
  }
  infer_shapes(out);
  return out;
}

ModelGraph absorb_qdq(const ModelGraph &g) {
  ModelGraph out = g;
  auto record = [&](const std::string &tensor, float scale) {
    // Attach to the producer, or to every consumer for inputs/initializers.
    if (auto p = out.producer(tensor)) {
      out.nodes[*p].quant[tensor] = QuantParams{scale, 0};
      return;
    }
    for (size_t c : out.consumers(tensor))
      out.nodes[c].quant[tensor] = QuantParams{scale, 0};
  };

  for (bool changed = true; changed;) {
    changed = false;
    for (size_t i = 0; i < out.nodes.size() && !changed; ++i) {
      const GraphNode &n = out.nodes[i];
      if (n.kind != OpKind::QuantizeLinear &&
          n.kind != OpKind::DequantizeLinear)
        continue;
      float scale = static_cast<float>(attr_float(n.attrs, "scale"));
      if (n.kind == OpKind::DequantizeLinear && out.is_initializer(n.inputs[0]) &&
          out.initializers.at(n.inputs[0]).dtype() == DType::INT8 &&
          !out.is_graph_output(n.outputs[0])) {
        std::string w = n.inputs[0], y = n.outputs[0];
        out.nodes.erase(out.nodes.begin() + static_cast<std::ptrdiff_t>(i));
        replace_uses(out, y, w);
        record(w, scale);
        changed = true;
        continue;
      }
      if (n.kind != OpKind::QuantizeLinear)
        continue;
      auto d = sole_consumer(out, n.outputs[0]);
      if (!d || out.nodes[*d].kind != OpKind::DequantizeLinear ||
          out.is_graph_output(out.nodes[*d].outputs[0]))
        continue;
      std::string x = n.inputs[0], y = out.nodes[*d].outputs[0];
      size_t a = std::max(i, *d), b = std::min(i, *d);
      out.nodes.erase(out.nodes.begin() + static_cast<std::ptrdiff_t>(a));
      out.nodes.erase(out.nodes.begin() + static_cast<std::ptrdiff_t>(b));
      replace_uses(out, y, x);
      record(x, scale);
      changed = true;
    }
  }
  infer_shapes(out);
  return out;
}

} // namespace imce
