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

#include "imce/compiler/compiled_io.h"

#include "imce/errors.h"
#include "imce/ir/model_io.h"

namespace imce {

using nlohmann::json;

namespace {

json scales_json(const std::vector<QuantParams> &qs) {
  json a = json::array();
  for (const auto &q : qs)
    a.push_back(q.scale);
  return a;
}

std::vector<QuantParams> scales_from(const json &a) {
  std::vector<QuantParams> out;
  for (const auto &v : a)
    out.push_back(QuantParams{v.get<float>(), 0});
  return out;
}

json specs_json(const std::vector<TensorSpec> &specs) {
  json a = json::array();
  for (const auto &s : specs)
    a.push_back(spec_to_json(s));
  return a;
}

std::vector<TensorSpec> specs_from(const json &a) {
  std::vector<TensorSpec> out;
  for (const auto &v : a)
    out.push_back(spec_from_json(v));
  return out;
}

} // namespace

json compiled_node_to_json(const CompiledNode &n, std::vector<uint8_t> &blob) {
  json j = node_to_json(n.node);
  j["class"] = to_string(n.accel);
  if (!n.origin.empty())
    j["origin"] = n.origin;
  j["in_scales"] = scales_json(n.in_scales);
  j["out_scales"] = scales_json(n.out_scales);
  j["in_specs"] = specs_json(n.in_specs);
  j["out_specs"] = specs_json(n.out_specs);
  j["cost_hint_us"] = n.cost_hint_us;
  if (n.weights2d) {
    const Int8Matrix &m = *n.weights2d;
    json w = append_blob(
        blob, TensorValue::int8(n.id() + ".weights2d", {m.rows, m.cols}, m.data));
    w["scale"] = n.weight_scale.scale;
    j["weights2d"] = w;
  }
  if (!n.bias.empty())
    j["bias"] = append_blob(
        blob, TensorValue::int32(n.id() + ".bias",
                                 {static_cast<int64_t>(n.bias.size())}, n.bias));
  if (!n.constants.empty()) {
    json c = json::array();
    for (const auto &[slot, codes] : n.constants) {
      json e = append_blob(
          blob, TensorValue::int8(n.node.inputs.at(slot),
                                  {static_cast<int64_t>(codes.size())}, codes));
      e["slot"] = slot;
      c.push_back(e);
    }
    j["constants"] = c;
  }
  return j;
}

CompiledNode compiled_node_from_json(const json &j,
                                     std::span<const uint8_t> blob) {
  CompiledNode n;
  n.node = node_from_json(j);
  n.accel = accel_class_from_string(j.at("class").get<std::string>());
  n.origin = j.value("origin", std::string());
  n.in_scales = scales_from(j.at("in_scales"));
  n.out_scales = scales_from(j.at("out_scales"));
  n.in_specs = specs_from(j.at("in_specs"));
  n.out_specs = specs_from(j.at("out_specs"));
  n.cost_hint_us = j.at("cost_hint_us").get<double>();
  if (j.contains("weights2d")) {
    const json &w = j.at("weights2d");
    TensorValue v = read_blob(w, blob);
    Int8Matrix m(v.shape().at(0), v.shape().at(1));
    auto codes = v.data<int8_t>();
    m.data.assign(codes.begin(), codes.end());
    n.weights2d = std::move(m);
    n.weight_scale = QuantParams{w.at("scale").get<float>(), 0};
  }
  if (j.contains("bias")) {
    TensorValue v = read_blob(j.at("bias"), blob);
    auto b = v.data<int32_t>();
    n.bias.assign(b.begin(), b.end());
  }
  if (j.contains("constants"))
    for (const auto &e : j.at("constants")) {
      TensorValue v = read_blob(e, blob);
      auto c = v.data<int8_t>();
      n.constants[e.at("slot").get<size_t>()] =
          std::vector<int8_t>(c.begin(), c.end());
    }
  return n;
}

json fpga_info_json(const CompiledModel &cm) {
  json nodes = json::array();
  for (const auto &f : cm.fpga_info)
    nodes.push_back({{"id", f.id},
                     {"class", to_string(f.accel)},
                     {"op", f.op},
                     {"in_bytes", f.in_bytes},
                     {"out_bytes", f.out_bytes},
                     {"cost_hint_us", f.cost_hint_us}});
  return {{"model", cm.name}, {"nodes", nodes}};
}

json adjacency_json(const Adjacency &adj) {
  json edges = json::array();
  for (auto [i, j] : adj.edges())
    edges.push_back({adj.ids()[i], adj.ids()[j]});
  return {{"nodes", adj.ids()}, {"edges", edges}};
}

void save_compiled(const CompiledModel &cm, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  std::vector<uint8_t> blob;
  json j;
  j["format"] = "imce-compiled";
  j["version"] = 1;
  j["name"] = cm.name;
  j["blob"] = "compiled.bin";
  j["inputs"] = specs_json(cm.inputs);
  j["input_scales"] = scales_json(cm.input_scales);
  j["outputs"] = specs_json(cm.outputs);
  j["output_scales"] = scales_json(cm.output_scales);
  j["nodes"] = json::array();
  for (const auto &n : cm.nodes)
    j["nodes"].push_back(compiled_node_to_json(n, blob));
  write_text(dir / "compiled.json", j.dump(2) + "\n");
  write_file(dir / "compiled.bin", blob);
  write_text(dir / "fpga_info.json", fpga_info_json(cm).dump(2) + "\n");
  write_text(dir / "adjacency.json", adjacency_json(cm.adjacency).dump(2) + "\n");
}

CompiledModel load_compiled(const std::filesystem::path &dir) {
  json j = read_json(dir / "compiled.json");
  auto blob = read_file(dir / j.value("blob", std::string("compiled.bin")));
  CompiledModel cm;
  try {
    cm.name = j.value("name", std::string());
    cm.inputs = specs_from(j.at("inputs"));
    cm.input_scales = scales_from(j.at("input_scales"));
    cm.outputs = specs_from(j.at("outputs"));
    cm.output_scales = scales_from(j.at("output_scales"));
    std::vector<std::string> ids;
    for (const auto &n : j.at("nodes")) {
      cm.nodes.push_back(compiled_node_from_json(n, blob));
      ids.push_back(cm.nodes.back().id());
    }
    cm.adjacency = Adjacency(ids);
    std::map<std::string, size_t> producer;
    for (size_t i = 0; i < cm.nodes.size(); ++i)
      for (const auto &o : cm.nodes[i].node.outputs)
        producer[o] = i;
    for (size_t k = 0; k < cm.nodes.size(); ++k)
      for (const auto &in : cm.nodes[k].node.inputs)
        if (auto it = producer.find(in); it != producer.end())
          cm.adjacency.set(it->second, k);
    for (const auto &n : cm.nodes) {
      FpgaInfo f{n.id(), n.accel, std::string(to_string(n.kind())), 0, 0,
                 n.cost_hint_us};
      for (const auto &s : n.in_specs)
        f.in_bytes += static_cast<int64_t>(s.byte_size());
      for (const auto &s : n.out_specs)
        f.out_bytes += static_cast<int64_t>(s.byte_size());
      cm.fpga_info.push_back(std::move(f));
    }
  } catch (const json::exception &e) {
    throw ParseError("compiled model in '" + dir.string() + "': " + e.what());
  }
  return cm;
}

} // namespace imce
