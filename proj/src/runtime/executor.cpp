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

#include "imce/runtime/executor.h"

#include <algorithm>

#include "imce/compiler/passes.h"
#include "imce/errors.h"
#include "imce/kernels/di.h"

namespace imce {

NodeRuntime::NodeRuntime(CompiledNode node, const NoiseModel &nm)
    : node_(std::move(node)), noise_(nm), node_key_(noise_node_key(node_.id())) {
  if (node_.accel == AccelClass::An) {
    an_ = AnKernel::from_node(node_);
    an_->matrix = program_weights(an_->matrix, noise_, node_key_);
  }
}

size_t NodeRuntime::input_bytes(size_t slot) const {
  return static_cast<size_t>(node_.in_specs.at(slot).num_elements());
}

std::vector<Codes> NodeRuntime::execute(const std::vector<Codes> &inputs,
                                        uint64_t seq) const {
  if (inputs.size() != arity())
    throw ShapeError("node '" + node_.id() + "' expects " +
                     std::to_string(arity()) + " inputs, got " +
                     std::to_string(inputs.size()));
  for (size_t s = 0; s < inputs.size(); ++s)
    if (!is_constant(s) && inputs[s].size() != input_bytes(s))
      throw ShapeError("node '" + node_.id() + "' input " + std::to_string(s) +
                       ": expected " + std::to_string(input_bytes(s)) +
                       " bytes, got " + std::to_string(inputs[s].size()));

  if (an_) {
    AccumulatorHook hook;
    if (noise_.read_active()) {
      const int64_t rows = an_->matrix.rows;
      hook = [this, seq, rows](std::span<int32_t> acc, uint64_t index) {
        read_noise(acc, noise_, node_key_, seq, index, rows);
      };
    }
    return {an_->run(inputs[0], hook)};
  }

  std::vector<QTensor> q;
  for (size_t s = 0; s < inputs.size(); ++s) {
    const Codes &c = is_constant(s) ? node_.constants.at(s) : inputs[s];
    q.push_back(QTensor{node_.in_specs[s].shape, c, node_.in_scales[s].scale});
  }
  std::vector<Codes> out;
  for (auto &t : run_di(node_, q))
    out.push_back(std::move(t.data));
  return out;
}

SequentialExecutor::SequentialExecutor(const CompiledModel &cm,
                                       const NoiseModel &nm)
    : cm_(cm) {
  for (const auto &n : cm_.nodes)
    nodes_.emplace_back(n, nm);
}

std::vector<Codes> SequentialExecutor::run(const std::vector<Codes> &inputs,
                                           uint64_t seq) const {
  if (inputs.size() != cm_.inputs.size())
    throw ShapeError("model expects " + std::to_string(cm_.inputs.size()) +
                     " inputs, got " + std::to_string(inputs.size()));
  std::map<std::string, Codes> values;
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (static_cast<int64_t>(inputs[i].size()) != cm_.inputs[i].num_elements())
      throw ShapeError("input '" + cm_.inputs[i].name + "': expected " +
                       std::to_string(cm_.inputs[i].num_elements()) +
                       " bytes, got " + std::to_string(inputs[i].size()));
    values[cm_.inputs[i].name] = inputs[i];
  }
  for (const auto &rt : nodes_) {
    const GraphNode &g = rt.node().node;
    std::vector<Codes> in(g.inputs.size());
    for (size_t s = 0; s < g.inputs.size(); ++s)
      if (!rt.is_constant(s))
        in[s] = values.at(g.inputs[s]);
    auto out = rt.execute(in, seq);
    for (size_t o = 0; o < out.size(); ++o)
      values[g.outputs[o]] = std::move(out[o]);
  }
  std::vector<Codes> result;
  for (const auto &s : cm_.outputs)
    result.push_back(values.at(s.name));
  return result;
}

Codes quantize_input(std::span<const float> v, float scale) {
  Codes c(v.size());
  for (size_t i = 0; i < v.size(); ++i)
    c[i] = quantize_value(v[i], scale);
  return c;
}

std::vector<float> dequantize(std::span<const int8_t> codes, float scale) {
  std::vector<float> v(codes.size());
  for (size_t i = 0; i < codes.size(); ++i)
    v[i] = static_cast<float>(codes[i]) * scale;
  return v;
}

double critical_path_us(const CompiledModel &cm) {
  std::vector<double> finish(cm.nodes.size(), 0.0);
  double best = 0.0;
  for (size_t j = 0; j < cm.nodes.size(); ++j) {
    double start = 0.0;
    for (size_t i = 0; i < j; ++i)
      if (cm.adjacency.at(i, j))
        start = std::max(start, finish[i]);
    finish[j] = start + cm.nodes[j].cost_hint_us;
    best = std::max(best, finish[j]);
  }
  return best;
}

} // namespace imce
