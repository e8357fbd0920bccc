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

#include "imce/mapper/configs.h"

#include "imce/compiler/compiled_io.h"
#include "imce/errors.h"
#include "imce/ir/model_io.h"

namespace imce {

using nlohmann::json;

namespace {

json transition_json(const Transition &t) {
  json routes = json::array();
  for (const auto &r : t.routes)
    routes.push_back({{"tensor", r.tensor},
                      {"src_output", r.src_output},
                      {"dst_input", r.dst_input}});
  return {{"channel", t.channel},
          {"src", {{"board", t.src_board}, {"node", t.src_node}}},
          {"dst", {{"board", t.dst_board}, {"node", t.dst_node}}},
          {"local", t.local()},
          {"routes", routes}};
}

Transition transition_from(const json &j) {
  Transition t;
  t.channel = j.at("channel").get<uint32_t>();
  t.src_board = j.at("src").at("board").get<int>();
  t.src_node = j.at("src").at("node").get<std::string>();
  t.dst_board = j.at("dst").at("board").get<int>();
  t.dst_node = j.at("dst").at("node").get<std::string>();
  for (const auto &r : j.at("routes"))
    t.routes.push_back(Route{r.at("tensor").get<std::string>(),
                             r.at("src_output").get<size_t>(),
                             r.at("dst_input").get<size_t>()});
  return t;
}

json io_json(const std::vector<TensorSpec> &specs,
             const std::vector<QuantParams> &scales) {
  json a = json::array();
  for (size_t i = 0; i < specs.size(); ++i)
    a.push_back({{"index", i},
                 {"spec", spec_to_json(specs[i])},
                 {"scale", scales.at(i).scale}});
  return a;
}

void io_from(const json &a, std::vector<TensorSpec> &specs,
             std::vector<QuantParams> &scales) {
  for (const auto &e : a) {
    specs.push_back(spec_from_json(e.at("spec")));
    scales.push_back(QuantParams{e.at("scale").get<float>(), 0});
  }
}

std::string cfg_name(int id) { return "board_" + std::to_string(id) + ".cfg"; }
std::string bin_name(int id) { return "board_" + std::to_string(id) + ".bin"; }

} // namespace

json board_config_to_json(const BoardConfig &c, std::vector<uint8_t> &blob) {
  json j;
  j["format"] = "imce-board";
  j["version"] = 1;
  j["board_id"] = c.board_id;
  j["class"] = to_string(c.accel);
  j["model"] = c.model;
  j["noise"] = noise_to_json(c.noise);
  j["nodes"] = json::array();
  for (const auto &n : c.nodes)
    j["nodes"].push_back(compiled_node_to_json(n, blob));
  j["transitions"] = json::array();
  for (const auto &t : c.transitions)
    j["transitions"].push_back(transition_json(t));
  j["inputs"] = json::array();
  for (const auto &b : c.inputs)
    j["inputs"].push_back(
        {{"index", b.index}, {"tensor", b.tensor}, {"node", b.node}, {"slot", b.slot}});
  j["outputs"] = json::array();
  for (const auto &b : c.outputs)
    j["outputs"].push_back({{"index", b.index},
                            {"tensor", b.tensor},
                            {"node", b.node},
                            {"output", b.output}});
  return j;
}

BoardConfig board_config_from_json(const json &j, std::span<const uint8_t> blob) {
  BoardConfig c;
  try {
    c.board_id = j.at("board_id").get<int>();
    c.accel = accel_class_from_string(j.at("class").get<std::string>());
    c.model = j.value("model", std::string());
    c.noise = noise_from_json(j.value("noise", json::object()));
    for (const auto &n : j.at("nodes"))
      c.nodes.push_back(compiled_node_from_json(n, blob));
    for (const auto &t : j.at("transitions"))
      c.transitions.push_back(transition_from(t));
    for (const auto &b : j.at("inputs"))
      c.inputs.push_back(InputBinding{b.at("index").get<size_t>(),
                                      b.at("tensor").get<std::string>(),
                                      b.at("node").get<std::string>(),
                                      b.at("slot").get<size_t>()});
    for (const auto &b : j.at("outputs"))
      c.outputs.push_back(OutputBinding{b.at("index").get<size_t>(),
                                        b.at("tensor").get<std::string>(),
                                        b.at("node").get<std::string>(),
                                        b.at("output").get<size_t>()});
  } catch (const json::exception &e) {
    throw ConfigError(std::string("board config: ") + e.what());
  } catch (const ParseError &e) {
    throw ConfigError(std::string("board config: ") + e.what());
  }
  return c;
}

PlanBundle build_bundle(const DeploymentPlan &plan, const CompiledModel &cm,
                        const NoiseModel &nm) {
  PlanBundle b;
  b.plan = plan;
  b.inputs = cm.inputs;
  b.input_scales = cm.input_scales;
  b.outputs = cm.outputs;
  b.output_scales = cm.output_scales;
  b.noise = nm;
  for (const auto &bi : plan.boards) {
    BoardConfig c;
    c.board_id = bi.id;
    c.accel = bi.accel;
    c.model = cm.name;
    c.noise = nm;
    b.boards.emplace(bi.id, std::move(c));
  }
  for (const auto &n : cm.nodes) {
    BoardConfig &c = b.boards.at(plan.assignment.at(n.id()));
    c.nodes.push_back(n);
    for (size_t s = 0; s < n.node.inputs.size(); ++s)
      for (size_t k = 0; k < cm.inputs.size(); ++k)
        if (n.node.inputs[s] == cm.inputs[k].name)
          c.inputs.push_back(InputBinding{k, cm.inputs[k].name, n.id(), s});
    for (size_t o = 0; o < n.node.outputs.size(); ++o)
      for (size_t k = 0; k < cm.outputs.size(); ++k)
        if (n.node.outputs[o] == cm.outputs[k].name)
          c.outputs.push_back(OutputBinding{k, cm.outputs[k].name, n.id(), o});
  }
  for (const auto &t : plan.transitions) {
    b.boards.at(t.src_board).transitions.push_back(t);
    if (!t.local())
      b.boards.at(t.dst_board).transitions.push_back(t);
  }
  return b;
}

json dfl_json(const PlanBundle &b) {
  const DeploymentPlan &p = b.plan;
  json j;
  j["format"] = "imce-dfl";
  j["version"] = 1;
  j["model"] = p.model;
  j["strategy"] = to_string(p.strategy);
  j["noise"] = noise_to_json(b.noise);
  j["inputs"] = io_json(b.inputs, b.input_scales);
  j["outputs"] = io_json(b.outputs, b.output_scales);
  j["assignment"] = p.assignment;
  j["boards"] = json::array();
  for (const auto &bi : p.boards) {
    json nodes = json::array();
    for (const auto &n : b.boards.at(bi.id).nodes)
      nodes.push_back(n.id());
    j["boards"].push_back({{"board_id", bi.id},
                           {"class", to_string(bi.accel)},
                           {"address", bi.address},
                           {"max_fthreads", bi.max_fthreads},
                           {"max_sthreads", bi.max_sthreads},
                           {"fthreads", p.fthreads.at(bi.id)},
                           {"sthreads", p.sthreads.at(bi.id)},
                           {"nodes", nodes},
                           {"config", cfg_name(bi.id)}});
  }
  j["transitions"] = json::array();
  for (const auto &t : p.transitions)
    j["transitions"].push_back(transition_json(t));
  j["s_links"] = p.inter_board_links();
  return j;
}

void save_bundle(const PlanBundle &b, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  for (const auto &[id, c] : b.boards) {
    std::vector<uint8_t> blob;
    json j = board_config_to_json(c, blob);
    j["blob"] = bin_name(id);
    write_text(dir / cfg_name(id), j.dump(2) + "\n");
    write_file(dir / bin_name(id), blob);
  }
  write_text(dir / "topology.dfl", dfl_json(b).dump(2) + "\n");
}

void emit_configs(const DeploymentPlan &plan, const CompiledModel &cm,
                  const NoiseModel &nm, const std::filesystem::path &dir) {
  save_bundle(build_bundle(plan, cm, nm), dir);
}

PlanBundle load_bundle(const std::filesystem::path &dir) {
  json j = read_json(dir / "topology.dfl");
  PlanBundle b;
  try {
    DeploymentPlan &p = b.plan;
    p.model = j.at("model").get<std::string>();
    p.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    b.noise = noise_from_json(j.at("noise"));
    io_from(j.at("inputs"), b.inputs, b.input_scales);
    io_from(j.at("outputs"), b.outputs, b.output_scales);
    p.assignment = j.at("assignment").get<std::map<std::string, int>>();
    for (const auto &e : j.at("boards")) {
      BoardInfo bi;
      bi.id = e.at("board_id").get<int>();
      bi.accel = accel_class_from_string(e.at("class").get<std::string>());
      bi.address = e.value("address", std::string());
      bi.max_fthreads = e.at("max_fthreads").get<int>();
      bi.max_sthreads = e.at("max_sthreads").get<int>();
      p.fthreads[bi.id] = e.at("fthreads").get<int>();
      p.sthreads[bi.id] = e.at("sthreads").get<int>();
      p.boards.push_back(bi);
      const std::string cfg = e.value("config", cfg_name(bi.id));
      json cj = read_json(dir / cfg);
      auto blob = read_file(dir / cj.value("blob", bin_name(bi.id)));
      b.boards.emplace(bi.id, board_config_from_json(cj, blob));
    }
    for (const auto &t : j.at("transitions"))
      p.transitions.push_back(transition_from(t));
  } catch (const json::exception &e) {
    throw ConfigError("topology in '" + dir.string() + "': " + e.what());
  }
  return b;
}

DeploymentPlan load_plan(const std::filesystem::path &dir) {
  return load_bundle(dir).plan;
}

} // namespace imce
