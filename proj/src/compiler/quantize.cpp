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
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "imce/compiler/passes.h"
#include "imce/compiler/reference.h"
#include "imce/errors.h"

namespace imce {

namespace {

// Union-find over tensor names whose scales must agree (Concat, Split,
// MaxPool move codes without requantizing).
class ScaleGroups {
 public:
  size_t id(const std::string &t) {
    auto [it, fresh] = index_.emplace(t, parent_.size());
    if (fresh)
      parent_.push_back(parent_.size());
    return it->second;
  }
  size_t find(size_t i) {
    while (parent_[i] != i)
      i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  void unite(const std::string &a, const std::string &b) {
    size_t ra = find(id(a)), rb = find(id(b));
    if (ra != rb)
      parent_[std::max(ra, rb)] = std::min(ra, rb);
  }
  size_t root(const std::string &t) { return find(id(t)); }

 private:
  std::map<std::string, size_t> index_;
  std::vector<size_t> parent_;
};

float max_abs(std::span<const float> v) {
  float m = 0.0f;
  for (float x : v)
    m = std::max(m, std::fabs(x));
  return m;
}

bool is_weight_slot(const GraphNode &n, size_t slot) {
  return (is_conv_class(n.kind) || n.kind == OpKind::MVM) && slot >= 1;
}

} // namespace

int8_t quantize_value(float v, float scale) {
  float q = std::round(v / scale);
  if (std::isnan(q))
    return 0;
  return static_cast<int8_t>(std::clamp(q, -127.0f, 127.0f));
}

float symmetric_scale(float m, const std::string &tensor, bool strict) {
  if (m > 0.0f && std::isfinite(m))
    return m / 127.0f;
  if (strict)
    throw DegenerateRangeError(tensor, "tensor '" + tensor +
                                           "' has a zero calibration range");
  spdlog::warn("tensor '{}' is identically zero over calibration; using scale "
               "1.0",
               tensor);
  return 1.0f;
}

ModelGraph quantize(const ModelGraph &g, const CalibrationSet &cal,
                    const QuantizeOptions &opts) {
  ModelGraph out = g;
  infer_shapes(out);

  // Activation tensors: graph inputs, node outputs and non-weight constants.
  std::vector<std::string> activations;
  for (const auto &s : out.graph_inputs)
    activations.push_back(s.name);
  for (const auto &n : out.nodes)
    for (const auto &o : n.outputs)
      activations.push_back(o);
  std::set<std::string> const_acts;
  for (const auto &n : out.nodes)
    for (size_t i = 0; i < n.inputs.size(); ++i)
      if (out.is_initializer(n.inputs[i]) && !is_weight_slot(n, i))
        const_acts.insert(n.inputs[i]);
  activations.insert(activations.end(), const_acts.begin(), const_acts.end());

  std::map<std::string, float> preset;
  for (const auto &t : activations)
    if (auto q = out.quant_of(t))
      preset[t] = q->scale;

  std::map<std::string, float> range;
  bool need_calibration = std::any_of(
      activations.begin(), activations.end(),
      [&](const std::string &t) { return !preset.count(t); });
  if (need_calibration) {
    if (cal.samples.empty())
      throw DegenerateRangeError("", "calibration set is empty");
    for (const auto &sample : cal.samples) {
      if (sample.size() != out.graph_inputs.size())
        throw ShapeError("calibration sample has " +
                         std::to_string(sample.size()) + " tensors, graph has " +
                         std::to_string(out.graph_inputs.size()) + " inputs");
      FloatTensors inputs;
      for (size_t i = 0; i < sample.size(); ++i) {
        if (sample[i].shape() != out.graph_inputs[i].shape)
          throw ShapeError("calibration sample shape " +
                           shape_str(sample[i].shape()) + " does not match " +
                           shape_str(out.graph_inputs[i].shape));
        inputs[out.graph_inputs[i].name] = sample[i].to_float();
      }
      auto env = run_fp32(out, inputs, /*keep_all=*/true);
      for (const auto &t : activations)
        if (auto it = env.find(t); it != env.end())
          range[t] = std::max(range[t], max_abs(it->second));
    }
  }

  ScaleGroups groups;
  for (const auto &t : activations)
    groups.id(t);
  for (const auto &n : out.nodes) {
    if (n.kind == OpKind::Concat || n.kind == OpKind::Split ||
        n.kind == OpKind::MaxPool) {
      for (const auto &i : n.inputs)
        for (const auto &o : n.outputs)
          groups.unite(i, o);
    }
  }
  // Group scale covers every member's range; preset scales are kept as-is so
  // that requantizing an already quantized graph is a no-op.
  std::map<size_t, float> group_scale;
  std::map<size_t, std::string> group_name;
  for (const auto &t : activations) {
    size_t r = groups.root(t);
    float cand = preset.count(t) ? preset[t] : range[t] / 127.0f;
    group_scale[r] = std::max(group_scale[r], cand);
    group_name.emplace(r, t);
  }
  std::map<std::string, float> scale;
  for (const auto &t : activations) {
    size_t r = groups.root(t);
    float s = group_scale[r];
    scale[t] = s > 0.0f ? s : symmetric_scale(0.0f, group_name[r],
                                              opts.strict_ranges);
  }
  for (const auto &[t, s] : preset)
    if (std::fabs(scale[t] - s) > 1e-6f * s)
      spdlog::info("scale of '{}' widened from {} to {} to match its group", t,
                   s, scale[t]);

  // Constant activations become INT8.
  for (const auto &t : const_acts) {
    auto &v = out.initializers.at(t);
    if (v.dtype() == DType::INT8)
      continue;
    std::vector<int8_t> codes;
    for (float x : v.to_float())
      codes.push_back(quantize_value(x, scale[t]));
    v = TensorValue::int8(t, v.shape(), std::move(codes));
  }

  for (auto &n : out.nodes) {
    for (size_t i = 0; i < n.inputs.size(); ++i)
      if (!is_weight_slot(n, i))
        n.quant[n.inputs[i]] = QuantParams{scale.at(n.inputs[i]), 0};
    for (const auto &o : n.outputs)
      n.quant[o] = QuantParams{scale.at(o), 0};
    if (!(is_conv_class(n.kind) || n.kind == OpKind::MVM))
      continue;

    const std::string &wname = n.inputs[1];
    auto &w = out.initializers.at(wname);
    float ws;
    if (w.dtype() == DType::INT8) {
      auto q = out.quant_of(wname);
      if (!q)
        throw ValidationError(wname, "INT8 weights '" + wname +
                                         "' carry no scale");
      ws = q->scale;
    } else {
      auto fw = w.to_float();
      ws = symmetric_scale(max_abs(fw), wname, opts.strict_ranges);
      std::vector<int8_t> codes;
      codes.reserve(fw.size());
      for (float x : fw)
        codes.push_back(quantize_value(x, ws));
      w = TensorValue::int8(wname, w.shape(), std::move(codes));
    }
    n.quant[wname] = QuantParams{ws, 0};

    if (n.inputs.size() == 3) {
      const std::string &bname = n.inputs[2];
      float bs = scale.at(n.inputs[0]) * ws;
      auto &b = out.initializers.at(bname);
      if (b.dtype() != DType::INT32) {
        std::vector<int32_t> codes;
        for (float x : b.to_float()) {
          double q = std::round(static_cast<double>(x) / bs);
          q = std::clamp(q, double(std::numeric_limits<int32_t>::min()),
                         double(std::numeric_limits<int32_t>::max()));
          codes.push_back(static_cast<int32_t>(q));
        }
        b = TensorValue::int32(bname, b.shape(), std::move(codes));
      }
      n.quant[bname] = QuantParams{bs, 0};
    }
  }
  return out;
}

} // namespace imce
