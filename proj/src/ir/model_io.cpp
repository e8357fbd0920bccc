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

#include "imce/ir/model_io.h"

#include <fstream>
#include <iterator>

#include "imce/errors.h"

namespace imce {

using nlohmann::json;

std::vector<uint8_t> read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IOError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path &path,
                std::span<const uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IOError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char *>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out)
    throw IOError("short write to '" + path.string() + "'");
}

void write_text(const std::filesystem::path &path, const std::string &text) {
  write_file(path, {reinterpret_cast<const uint8_t *>(text.data()), text.size()});
}

json read_json(const std::filesystem::path &path) {
  auto raw = read_file(path);
  if (raw.empty())
    throw ParseError("'" + path.string() + "' is empty");
  try {
    return json::parse(raw.begin(), raw.end());
  } catch (const json::exception &e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

json spec_to_json(const TensorSpec &s) {
  return {{"name", s.name}, {"shape", s.shape}, {"dtype", to_string(s.dtype)}};
}

TensorSpec spec_from_json(const json &j) {
  TensorSpec s;
  s.name = j.at("name").get<std::string>();
  s.shape = j.at("shape").get<Shape>();
  s.dtype = dtype_from_string(j.value("dtype", std::string("FP32")));
  return s;
}

json attrs_to_json(const Attrs &a) {
  json j = json::object();
  for (const auto &[k, v] : a)
    std::visit([&](const auto &x) { j[k] = x; }, v);
  return j;
}

Attrs attrs_from_json(const json &j) {
  Attrs a;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const json &v = it.value();
    if (v.is_number_integer())
      a[it.key()] = v.get<int64_t>();
    else if (v.is_number())
      a[it.key()] = v.get<double>();
    else if (v.is_array())
      a[it.key()] = v.get<std::vector<int64_t>>();
    else
      throw ParseError("attribute '" + it.key() + "' has unsupported type");
  }
  return a;
}

json node_to_json(const GraphNode &n) {
  json j{{"id", n.id},
         {"op", to_string(n.kind)},
         {"inputs", n.inputs},
         {"outputs", n.outputs},
         {"attrs", attrs_to_json(n.attrs)}};
  if (!n.quant.empty()) {
    json q = json::object();
    for (const auto &[t, p] : n.quant)
      q[t] = {{"scale", p.scale}, {"zero_point", p.zero_point}};
    j["quant"] = q;
  }
  return j;
}

GraphNode node_from_json(const json &j) {
  GraphNode n;
  n.id = j.at("id").get<std::string>();
  n.kind = op_kind_from_string(j.at("op").get<std::string>());
  n.inputs = j.at("inputs").get<std::vector<std::string>>();
  n.outputs = j.at("outputs").get<std::vector<std::string>>();
  if (j.contains("attrs"))
    n.attrs = attrs_from_json(j.at("attrs"));
  if (j.contains("quant"))
    for (auto it = j.at("quant").begin(); it != j.at("quant").end(); ++it)
      n.quant[it.key()] = QuantParams{it.value().at("scale").get<float>(),
                                      it.value().value("zero_point", 0)};
  return n;
}

json append_blob(std::vector<uint8_t> &blob, const TensorValue &v) {
  // 16-byte alignment keeps offsets friendly to mmap readers.
  while (blob.size() % 16)
    blob.push_back(0);
  json j = spec_to_json(v.spec());
  j["offset"] = blob.size();
  auto bytes = v.bytes();
  j["length"] = bytes.size();
  blob.insert(blob.end(), bytes.begin(), bytes.end());
  return j;
}

TensorValue read_blob(const json &entry, std::span<const uint8_t> blob) {
  TensorSpec spec = spec_from_json(entry);
  auto offset = entry.at("offset").get<uint64_t>();
  auto length = entry.at("length").get<uint64_t>();
  if (offset > blob.size() || length > blob.size() - offset)
    throw ParseError("initializer '" + spec.name + "' range [" +
                     std::to_string(offset) + ", +" + std::to_string(length) +
                     ") exceeds blob of " + std::to_string(blob.size()) +
                     " bytes");
  try {
    return TensorValue::from_bytes(std::move(spec), blob.subspan(offset, length));
  } catch (const ShapeError &e) {
    throw ParseError(e.what());
  }
}

ModelGraph load_model(const std::filesystem::path &path) {
  json j = read_json(path);
  ModelGraph g;
  try {
    if (!j.is_object())
      throw ParseError("model file must hold a JSON object");
    g.name = j.value("name", path.stem().string());
    for (const auto &s : j.at("inputs"))
      g.graph_inputs.push_back(spec_from_json(s));
    for (const auto &s : j.at("outputs"))
      g.graph_outputs.push_back(spec_from_json(s));
    for (const auto &n : j.at("nodes"))
      g.nodes.push_back(node_from_json(n));
    if (j.contains("initializers") && !j.at("initializers").empty()) {
      auto blob_path = path.parent_path() /
                       j.value("blob", path.stem().string() + ".bin");
      auto blob = read_file(blob_path);
      for (const auto &e : j.at("initializers")) {
        auto v = read_blob(e, blob);
        std::string name = v.name();
        if (!g.initializers.emplace(name, std::move(v)).second)
          throw ValidationError(name, "duplicate initializer '" + name + "'");
      }
    }
  } catch (const json::exception &e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  } catch (const IOError &e) {
    throw ParseError(e.what());
  }
  validate(g);
  infer_shapes(g);
  return g;
}

void save_model(const ModelGraph &g, const std::filesystem::path &path) {
  std::vector<uint8_t> blob;
  json j;
  j["format"] = "imce-model";
  j["version"] = 1;
  j["name"] = g.name;
  j["blob"] = path.stem().string() + ".bin";
  j["inputs"] = json::array();
  for (const auto &s : g.graph_inputs)
    j["inputs"].push_back(spec_to_json(s));
  j["outputs"] = json::array();
  for (const auto &s : g.graph_outputs)
    j["outputs"].push_back(spec_to_json(s));
  j["initializers"] = json::array();
  for (const auto &[name, v] : g.initializers)
    j["initializers"].push_back(append_blob(blob, v));
  j["nodes"] = json::array();
  for (const auto &n : g.nodes)
    j["nodes"].push_back(node_to_json(n));
  write_text(path, j.dump(2) + "\n");
  auto bin = path;
  bin.replace_extension(".bin");
  write_file(bin, blob);
}

} // namespace imce
