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

#include <algorithm>

#include "imce/compiler/passes.h"
#include "imce/errors.h"
#include "imce/kernels/cost.h"

namespace imce {

// An-Accelerator matrix limits: stored rows (input length) x cols (outputs).
constexpr int64_t kAnMaxRows = 4096;
constexpr int64_t kAnMaxCols = 512;

std::string_view to_string(AccelClass c) { return c == AccelClass::An ? "An" : "Di"; }

AccelClass accel_class_from_string(std::string_view s) {
  if (s == "An" || s == "an")
    return AccelClass::An;
  if (s == "Di" || s == "di")
    return AccelClass::Di;
  throw ParseError("unknown accelerator class '" + std::string(s) + "'");
}

size_t CompiledModel::index_of(std::string_view id) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id() == id)
      return i;
  throw ValidationError(std::string(id), "no compiled node '" + std::string(id) + "'");
}

Int8Matrix reshape_weights(const GraphNode &node, const TensorValue &w) {
  if (w.dtype() != DType::INT8)
    throw ShapeError("weights '" + w.name() + "' of node '" + node.id +
                     "' are not INT8");
  const Shape &s = w.shape();
  int64_t out = 0, len = 0;
  if (node.kind == OpKind::MVM) {
    if (s.size() != 2)
      throw ShapeError("MVM weights must be 2-D, got " + shape_str(s));
    out = s[0];
    len = s[1];
  } else if (is_conv_class(node.kind)) {
    if (s.size() != 4)
      throw ShapeError("Conv weights must be 4-D, got " + shape_str(s));
    int64_t group = attr_int(node.attrs, "group", 1);
    out = s[0];
    len = s[1] * group * s[2] * s[3];
  } else {
    throw ShapeError("node '" + node.id + "' carries no weights");
  }
  const int64_t rows = round_up16(out), cols = round_up16(len);
  // The accelerator stores the transpose: cols -> matrix rows.
  if (cols > kAnMaxRows || rows > kAnMaxCols)
    throw SizeError("node '" + node.id + "': weight matrix " +
                    std::to_string(cols) + "x" + std::to_string(rows) +
                    " (padded inputs x outputs) exceeds the " +
                    std::to_string(kAnMaxRows) + "x" +
                    std::to_string(kAnMaxCols) + " An-Accelerator limit");

  Int8Matrix m(rows, cols);
  auto codes = w.data<int8_t>();
  if (node.kind == OpKind::MVM) {
    for (int64_t o = 0; o < out; ++o)
      std::copy_n(codes.begin() + o * len, len, m.data.begin() + o * cols);
    return m;
  }
  const int64_t group = attr_int(node.attrs, "group", 1);
  const int64_t cin_g = s[1], kh = s[2], kw = s[3];
  const int64_t cout_g = out / group;
  for (int64_t o = 0; o < out; ++o) {
    const int64_t c0 = (o / cout_g) * cin_g;
    for (int64_t ci = 0; ci < cin_g; ++ci)
      for (int64_t ky = 0; ky < kh; ++ky)
        for (int64_t kx = 0; kx < kw; ++kx)
          m.at(o, ((c0 + ci) * kh + ky) * kw + kx) =
              codes[((o * cin_g + ci) * kh + ky) * kw + kx];
  }
  return m;
}

namespace {

TensorSpec int8_spec(const ModelGraph &g, const std::string &t) {
  auto s = g.spec_of(t);
  if (!s)
    throw ValidationError(t, "tensor '" + t + "' has no shape");
  return TensorSpec{t, s->shape, DType::INT8};
}

QuantParams quant_or_throw(const ModelGraph &g, const std::string &t) {
  auto q = g.quant_of(t);
  if (!q)
    throw ValidationError(t, "tensor '" + t + "' was not quantized");
  return *q;
}

int64_t conv_patches(const TensorSpec &out) {
  return out.shape[2] * out.shape[3];
}

CompiledNode lower(const ModelGraph &q, const GraphNode &n,
                   const CompileOptions &opts) {
  CompiledNode cn;
  cn.node = n;
  const bool weighted = is_conv_class(n.kind) || n.kind == OpKind::MVM;
  const size_t n_act = weighted ? 1 : n.inputs.size();
  for (size_t i = 0; i < n_act; ++i) {
    const std::string &t = n.inputs[i];
    cn.in_specs.push_back(int8_spec(q, t));
    cn.in_scales.push_back(quant_or_throw(q, t));
    if (q.is_initializer(t)) {
      auto codes = q.initializers.at(t).data<int8_t>();
      cn.constants[i] = std::vector<int8_t>(codes.begin(), codes.end());
    }
  }
  for (const auto &o : n.outputs) {
    cn.out_specs.push_back(int8_spec(q, o));
    cn.out_scales.push_back(quant_or_throw(q, o));
  }
  int64_t out_bytes = 0;
  for (const auto &s : cn.out_specs)
    out_bytes += s.num_elements();
  int64_t in_bytes = 0;
  for (const auto &s : cn.in_specs)
    in_bytes += s.num_elements();

  if (weighted) {
    cn.accel = AccelClass::An;
    const auto &w = q.initializers.at(n.inputs[1]);
    cn.weights2d = reshape_weights(n, w);
    cn.weight_scale = quant_or_throw(q, n.inputs[1]);
    if (n.inputs.size() == 3) {
      auto b = q.initializers.at(n.inputs[2]).data<int32_t>();
      cn.bias.assign(b.begin(), b.end());
    }
    // Weights live in weights2d; the node keeps only its activation input.
    cn.node.inputs.resize(1);
    int64_t patches = n.kind == OpKind::MVM ? 1 : conv_patches(cn.out_specs[0]);
    cn.cost_hint_us =
        an_conv_cost_us(patches, cn.weights2d->cols, cn.weights2d->rows);
    return cn;
  }

  switch (n.kind) {
  case OpKind::AvgPool:
    if (!opts.avgpool_on_di) {
      // Depthwise convolution with uniform 1/(kH*kW) weights.
      cn.accel = AccelClass::An;
      cn.origin = "AvgPool";
      auto k = attr_ints(n.attrs, "kernel_shape");
      int64_t c = cn.in_specs[0].shape[1];
      cn.node.kind = OpKind::Conv2D;
      cn.node.attrs["pads"] = attr_ints(n.attrs, "pads", {0, 0});
      cn.node.attrs["group"] = c;
      TensorValue w = TensorValue::int8(
          n.id + ".avg_weights", {c, 1, k[0], k[1]},
          std::vector<int8_t>(static_cast<size_t>(c * k[0] * k[1]), 127));
      cn.weights2d = reshape_weights(cn.node, w);
      cn.weight_scale = QuantParams{1.0f / static_cast<float>(k[0] * k[1]) / 127.0f, 0};
      cn.cost_hint_us = an_conv_cost_us(conv_patches(cn.out_specs[0]),
                                        cn.weights2d->cols, cn.weights2d->rows);
      return cn;
    }
    cn.accel = AccelClass::Di;
    cn.cost_hint_us = di_cost_us(DiFunction::AvgPool, in_bytes);
    return cn;
  case OpKind::Add:
  case OpKind::FusedAddReLU:
    cn.accel = AccelClass::Di;
    cn.cost_hint_us = di_cost_us(DiFunction::Add, out_bytes);
    return cn;
  case OpKind::SiLU:
    cn.accel = AccelClass::Di;
    cn.cost_hint_us = di_cost_us(DiFunction::SiLU, out_bytes);
    return cn;
  case OpKind::MaxPool:
    cn.accel = AccelClass::Di;
    cn.cost_hint_us = di_cost_us(DiFunction::MaxPool, in_bytes);
    return cn;
  case OpKind::Concat:
    cn.accel = AccelClass::Di;
    cn.cost_hint_us = di_cost_us(DiFunction::Concat, out_bytes);
    return cn;
  case OpKind::Split:
    cn.accel = AccelClass::Di;
    cn.cost_hint_us = di_cost_us(DiFunction::Split, in_bytes);
    return cn;
  default:
    throw UnsupportedOpError(n.id, "node '" + n.id + "' (" +
                                       std::string(to_string(n.kind)) +
                                       ") has no accelerator implementation");
  }
}

} // namespace

CompiledModel compile(const ModelGraph &g, const CalibrationSet &cal,
                      const CompileOptions &opts, CompileReport *report) {
  validate(g);
  ModelGraph a = absorb_qdq(g);
  ModelGraph b = optimize(a);
  ModelGraph c = fuse(b);
  ModelGraph q = quantize(c, cal, opts.quant);

  CompiledModel cm;
  cm.name = g.name;
  cm.adjacency = adjacency(q);
  for (const auto &id : cm.adjacency.ids()) {
    cm.nodes.push_back(lower(q, *q.find_node(id), opts));
    const CompiledNode &cn = cm.nodes.back();
    FpgaInfo info{cn.id(), cn.accel, std::string(to_string(cn.kind())), 0, 0,
                  cn.cost_hint_us};
    for (const auto &s : cn.in_specs)
      info.in_bytes += static_cast<int64_t>(s.byte_size());
    for (const auto &s : cn.out_specs)
      info.out_bytes += static_cast<int64_t>(s.byte_size());
    cm.fpga_info.push_back(std::move(info));
  }
  for (const auto &s : q.graph_inputs) {
    cm.inputs.push_back(int8_spec(q, s.name));
    cm.input_scales.push_back(quant_or_throw(q, s.name));
  }
  for (const auto &s : q.graph_outputs) {
    cm.outputs.push_back(int8_spec(q, s.name));
    cm.output_scales.push_back(quant_or_throw(q, s.name));
  }

  if (report) {
    report->input_nodes = g.nodes.size();
    report->after_optimize = b.nodes.size();
    report->after_fuse = c.nodes.size();
    report->an_nodes = static_cast<size_t>(
        std::count_if(cm.nodes.begin(), cm.nodes.end(),
                      [](const CompiledNode &n) { return n.accel == AccelClass::An; }));
    report->di_nodes = cm.nodes.size() - report->an_nodes;
  }
  return cm;
}

CompiledModel compile(const ModelGraph &g, const CalibrationSet &cal,
                      const CompileOptions &opts) {
  return compile(g, cal, opts, nullptr);
}

} // namespace imce
