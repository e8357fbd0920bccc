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

#include "imce/cli/toolchain.h"

#include <algorithm>
#include <chrono>
#include <random>
#include <sstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "imce/compiler/compiled_io.h"
#include "imce/compiler/passes.h"
#include "imce/compiler/reference.h"
#include "imce/errors.h"
#include "imce/ir/model_io.h"
#include "imce/mapper/configs.h"
#include "imce/runtime/cluster.h"
#include "imce/runtime/executor.h"
#include "imce/runtime/local_cluster.h"
#include "imce/zoo/digits.h"
#include "imce/zoo/models.h"

namespace imce {

using nlohmann::json;
namespace fs = std::filesystem;

// Measured figures of the FPGA prototype, echoed for comparison only.
struct PrototypeFigures {
  const char *model;
  double rate_per_s;
  double latency_ms;
};
constexpr PrototypeFigures kPrototype[] = {{"resnet8", 39.0, 121.0},
                                           {"resnet18s", 18.0, 444.0}};

static json prototype_json() {
  json j = json::object();
  for (const auto &p : kPrototype)
    j[p.model] = {{"rate_per_s", p.rate_per_s}, {"latency_ms", p.latency_ms}};
  j["note"] = "FPGA prototype figures, shown for comparison only";
  return j;
}

int exit_code_for(const std::exception &e) {
  if (dynamic_cast<const DegenerateRangeError *>(&e) ||
      dynamic_cast<const ScaleMismatchError *>(&e))
    return kExitQuantization;
  if (dynamic_cast<const CapacityError *>(&e) ||
      dynamic_cast<const ConnectivityError *>(&e))
    return kExitMapping;
  if (dynamic_cast<const DistributedError *>(&e) ||
      dynamic_cast<const TimeoutError *>(&e) ||
      dynamic_cast<const ProtocolError *>(&e))
    return kExitDistributed;
  if (dynamic_cast<const ParseError *>(&e) || dynamic_cast<const ValidationError *>(&e) ||
      dynamic_cast<const ShapeError *>(&e) || dynamic_cast<const SizeError *>(&e) ||
      dynamic_cast<const ConfigError *>(&e) || dynamic_cast<const IOError *>(&e) ||
      dynamic_cast<const json::exception *>(&e))
    return kExitInvalid;
  return kExitFailure;
}

NoiseModel parse_noise(const std::string &spec, uint64_t seed) {
  NoiseModel nm;
  nm.seed = seed;
  if (spec.empty() || spec == "none")
    return nm;
  bool prog = false, read = false;
  std::string kind;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("noise option '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    try {
      if (key == "sigma_prog") {
        nm.sigma_prog = std::stod(value);
        prog = true;
      } else if (key == "sigma_read") {
        nm.sigma_read = std::stod(value);
        read = true;
      } else if (key == "kind") {
        kind = value;
      } else if (key == "seed") {
        nm.seed = std::stoull(value);
      } else {
        throw ConfigError("unknown noise option '" + key + "'");
      }
    } catch (const std::logic_error &) {
      throw ConfigError("bad value for noise option '" + key + "'");
    }
  }
  if (nm.sigma_prog < 0 || nm.sigma_read < 0)
    throw ConfigError("noise sigmas must be non-negative");
  if (!kind.empty())
    nm.kind = noise_kind_from_string(kind);
  else if (prog && read)
    nm.kind = NoiseModel::Kind::Combined;
  else if (prog)
    nm.kind = NoiseModel::Kind::GaussianProgramming;
  else if (read)
    nm.kind = NoiseModel::Kind::GaussianRead;
  return nm;
}

TensorSet make_inputs(const fs::path &file, const std::string &synthetic,
                      const std::vector<TensorSpec> &specs, uint64_t seed) {
  if (!file.empty())
    return load_tensor_set(file);
  if (synthetic.empty())
    throw ConfigError("no input source: give an input file or a generator");
  auto colon = synthetic.find(':');
  const std::string kind = synthetic.substr(0, colon);
  size_t n = 0;
  try {
    n = colon == std::string::npos ? 1 : std::stoul(synthetic.substr(colon + 1));
  } catch (const std::logic_error &) {
    throw ConfigError("bad generator '" + synthetic + "'");
  }
  TensorSet ts;
  if (kind == "uniform") {
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i < n; ++i) {
      std::vector<TensorValue> sample;
      for (const auto &s : specs) {
        std::vector<float> v(static_cast<size_t>(num_elements(s.shape)));
        for (auto &x : v)
          x = static_cast<float>(2.0 * uniform01(rng) - 1.0);
        sample.push_back(TensorValue::fp32(s.name, s.shape, std::move(v)));
      }
      ts.samples.push_back(std::move(sample));
    }
    return ts;
  }
  if (kind == "digits") {
    if (specs.size() != 1 ||
        num_elements(specs[0].shape) != Dataset::kSide * Dataset::kSide)
      throw ConfigError("the digits generator needs one 12x12 input");
    auto ds = make_digits(n, seed);
    for (size_t i = 0; i < n; ++i)
      ts.samples.push_back({TensorValue::fp32(specs[0].name, specs[0].shape,
                                              ds.images[i])});
    ts.labels = ds.labels;
    return ts;
  }
  throw ConfigError("unknown generator '" + kind + "' (uniform, digits)");
}

namespace {

std::vector<TensorSpec> as_fp32(std::vector<TensorSpec> specs) {
  for (auto &s : specs)
    s.dtype = DType::FP32;
  return specs;
}

// FP32 (or already quantized INT8) samples -> INT8 input codes.
std::vector<std::vector<Codes>> to_codes(const TensorSet &ts,
                                         const std::vector<TensorSpec> &specs,
                                         const std::vector<QuantParams> &scales) {
  std::vector<std::vector<Codes>> all;
  for (size_t i = 0; i < ts.samples.size(); ++i) {
    const auto &sample = ts.samples[i];
    if (sample.size() != specs.size())
      throw ShapeError(fmt::format("sample {} has {} tensors, model takes {}", i,
                                   sample.size(), specs.size()));
    std::vector<Codes> codes;
    for (size_t k = 0; k < specs.size(); ++k) {
      const auto &t = sample[k];
      if (t.size() != num_elements(specs[k].shape))
        throw ShapeError(fmt::format("sample {} input '{}' has {} elements, expected {}",
                                     i, specs[k].name, t.size(),
                                     num_elements(specs[k].shape)));
      if (t.dtype() == DType::INT8) {
        auto d = t.data<int8_t>();
        codes.emplace_back(d.begin(), d.end());
      } else {
        auto f = t.to_float();
        codes.push_back(quantize_input(f, scales[k].scale));
      }
    }
    all.push_back(std::move(codes));
  }
  return all;
}

TensorSet codes_to_set(const std::vector<std::vector<Codes>> &outputs,
                       const std::vector<TensorSpec> &specs) {
  TensorSet ts;
  for (const auto &sample : outputs) {
    std::vector<TensorValue> tensors;
    for (size_t k = 0; k < specs.size(); ++k)
      tensors.push_back(TensorValue::int8(specs[k].name, specs[k].shape, sample[k]));
    ts.samples.push_back(std::move(tensors));
  }
  return ts;
}

int argmax_codes(const Codes &c) {
  return static_cast<int>(std::max_element(c.begin(), c.end()) - c.begin());
}

template <typename Fn> int guarded(std::ostream &err, Fn &&fn) {
  try {
    return fn();
  } catch (const CapacityError &e) {
    err << "error: " << e.what() << " (class " << e.accel_class() << ", shortfall "
        << e.shortfall() << ")\n";
    return kExitMapping;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

fs::path resolve(const fs::path &base, const std::string &p) {
  fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

} // namespace

int cmd_compile(const CompileArgs &a, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    ModelGraph g = load_model(a.model);
    CalibrationSet cal;
    if (!a.calibration.empty()) {
      cal.samples = load_tensor_set(a.calibration).samples;
    } else {
      spdlog::warn("no calibration set given; using 16 uniform samples");
      cal.samples = make_inputs({}, "uniform:16", g.graph_inputs, a.seed).samples;
    }
    CompileOptions opts;
    opts.quant.strict_ranges = a.strict_ranges;
    opts.avgpool_on_di = a.avgpool_on_di;
    CompileReport rep;
    CompiledModel cm = compile(g, cal, opts, &rep);
    fs::create_directories(a.out_dir);
    save_compiled(cm, a.out_dir);
    json report = {{"model", cm.name},
                   {"input_nodes", rep.input_nodes},
                   {"after_optimize", rep.after_optimize},
                   {"after_fuse", rep.after_fuse},
                   {"an_nodes", rep.an_nodes},
                   {"di_nodes", rep.di_nodes}};
    write_text(a.out_dir / "compile_report.json", report.dump(2) + "\n");
    out << fmt::format("{:<10} {:>4} nodes\n", "validate", rep.input_nodes)
        << fmt::format("{:<10} {:>4} nodes\n", "optimize", rep.after_optimize)
        << fmt::format("{:<10} {:>4} nodes\n", "fuse", rep.after_fuse)
        << fmt::format("{:<10} {:>4} nodes\n", "quantize", rep.after_fuse)
        << fmt::format("{:<10} {:>4} nodes (An {}, Di {})\n", "lower",
                       cm.nodes.size(), rep.an_nodes, rep.di_nodes)
        << "wrote " << a.out_dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_map(const MapArgs &a, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    CompiledModel cm = load_compiled(a.compiled_dir);
    HwInfo hw = load_hw_info(a.hw_info);
    Strategy s;
    try {
      s = strategy_from_string(a.strategy);
    } catch (const std::exception &e) {
      throw ConfigError(e.what());
    }
    DeploymentPlan plan = map_nodes(cm, hw, s);
    if (auto bad = check_plan(plan, cm, hw); !bad.empty())
      throw Error("mapper produced an invalid plan: " + bad.front());
    fs::create_directories(a.out_dir);
    emit_configs(plan, cm, NoiseModel{}, a.out_dir);

    std::map<int, std::vector<std::string>> hosted;
    for (const auto &n : cm.nodes)
      hosted[plan.assignment.at(n.id())].push_back(n.id());
    out << fmt::format("{:>5}  {:<5}  {:>9}  {:>9}  {}\n", "board", "class",
                       "F-threads", "S-threads", "nodes");
    for (const auto &b : plan.boards) {
      std::string nodes;
      for (const auto &id : hosted[b.id])
        nodes += (nodes.empty() ? "" : " ") + id;
      out << fmt::format("{:>5}  {:<5}  {:>9}  {:>9}  {}\n", b.id, to_string(b.accel),
                         fmt::format("{}/{}", plan.fthreads.at(b.id), b.max_fthreads),
                         fmt::format("{}/{}", plan.sthreads.at(b.id), b.max_sthreads),
                         nodes);
    }
    out << fmt::format("strategy {}: {} nodes on {} of {} boards, {} inter-board links\n",
                       to_string(s), cm.nodes.size(), plan.boards.size(),
                       hw.boards.size(), plan.inter_board_links());
    return kExitOk;
  });
}

int cmd_run(const RunArgs &args, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    RunArgs a = args;
    if (!a.manifest.empty()) {
      // Manifest: compile and map into the output directory, then run.
      json m = read_json(a.manifest);
      const fs::path base = a.manifest.parent_path();
      try {
        CompileArgs c;
        c.model = resolve(base, m.at("model").get<std::string>());
        if (m.contains("calibration"))
          c.calibration = resolve(base, m.at("calibration").get<std::string>());
        c.out_dir = a.out_dir / "compiled";
        c.seed = a.seed;
        if (int rc = cmd_compile(c, out, err); rc != kExitOk)
          return rc;
        MapArgs mp;
        mp.compiled_dir = c.out_dir;
        mp.hw_info = resolve(base, m.at("hw_info").get<std::string>());
        mp.strategy = m.value("strategy", "loadbalance");
        mp.out_dir = a.out_dir / "deploy";
        if (int rc = cmd_map(mp, out, err); rc != kExitOk)
          return rc;
        a.deploy_dir = mp.out_dir;
        if (a.noise.empty())
          a.noise = m.value("noise", "");
        if (m.contains("window"))
          a.window = m.at("window").get<int>();
        if (a.inputs.empty() && a.synthetic.empty()) {
          if (m.contains("inputs"))
            a.inputs = resolve(base, m.at("inputs").get<std::string>());
          else
            a.synthetic = m.value("synthetic", "");
        }
      } catch (const json::exception &e) {
        throw ParseError("manifest: " + std::string(e.what()));
      }
    }
    if (a.window < 1)
      throw ConfigError("window must be at least 1");

    PlanBundle bundle = load_bundle(a.deploy_dir);
    if (!a.noise.empty()) {
      bundle.noise = parse_noise(a.noise, a.seed);
      for (auto &[id, cfg] : bundle.boards)
        cfg.noise = bundle.noise;
    }
    TensorSet ts = make_inputs(a.inputs, a.synthetic, as_fp32(bundle.inputs), a.seed);
    auto inputs = to_codes(ts, bundle.inputs, bundle.input_scales);
    fs::create_directories(a.out_dir);

    std::vector<InferenceResult> results;
    StatsReport stats;
    std::string failure;
    int failure_code = kExitOk;
    const auto t0 = std::chrono::steady_clock::now();
    auto t1 = t0;
    try {
      LocalDeployment local;
      std::unique_ptr<ClusterHandle> remote;
      ClusterHandle *handle = nullptr;
      if (a.local) {
        LocalClusterOptions lo;
        lo.worker = a.worker;
        lo.threads = a.threads;
        lo.pace = a.pace;
        lo.log_level = a.worker_log_level;
        local = deploy_local(bundle, lo);
        handle = local.handle.get();
      } else {
        std::map<int, Endpoint> addresses;
        for (const auto &b : bundle.plan.boards) {
          if (b.address.empty())
            throw ConfigError(fmt::format("board {} has no address", b.id));
          addresses[b.id] = parse_endpoint(b.address);
        }
        remote = ClusterHandle::configure(bundle, addresses);
        handle = remote.get();
      }
      try {
        handle->run(inputs, a.window,
                    [&](const InferenceResult &r) { results.push_back(r); });
      } catch (...) {
        t1 = std::chrono::steady_clock::now();
        try {
          stats = handle->collect_stats();
        } catch (const std::exception &) {
        }
        throw;
      }
      t1 = std::chrono::steady_clock::now();
      stats = handle->collect_stats();
      handle->shutdown();
    } catch (const std::exception &e) {
      failure = e.what();
      failure_code = exit_code_for(e);
      if (failure_code == kExitFailure || dynamic_cast<const IOError *>(&e))
        failure_code = kExitDistributed;
    }

    // Outputs and reports; partial results are flushed on failure.
    std::vector<std::vector<Codes>> outs;
    for (const auto &r : results)
      outs.push_back(r.outputs);
    save_tensor_set(codes_to_set(outs, bundle.outputs), a.out_dir / "outputs.json");

    const SimulatedMetrics sim = simulate(bundle);
    json report;
    report["model"] = bundle.plan.model;
    report["strategy"] = to_string(bundle.plan.strategy);
    report["window"] = a.window;
    report["noise"] = noise_to_json(bundle.noise);
    report["requests"] = inputs.size();
    report["completed"] = results.size();
    report["boards"] = bundle.plan.boards.size();
    report["inter_board_links"] = bundle.plan.inter_board_links();
    report["outputs"] = "outputs.json";
    json schedule = json::array();
    for (const auto &t : sim.schedule)
      schedule.push_back(
          {{"node", t.node}, {"board", t.board}, {"start_us", t.start_us}, {"end_us", t.end_us}});
    report["simulated"] = {{"latency_us", sim.latency_us},
                           {"rate_per_s", sim.rate_per_s},
                           {"schedule", schedule}};
    report["prototype_reference"] = prototype_json();
    std::optional<double> accuracy;
    if (!ts.labels.empty() && !results.empty()) {
      size_t correct = 0;
      for (const auto &r : results)
        if (argmax_codes(r.outputs.at(0)) == ts.labels.at(r.seq - 1))
          ++correct;
      accuracy = static_cast<double>(correct) / static_cast<double>(results.size());
      report["accuracy"] = *accuracy;
    }
    if (!failure.empty())
      report["error"] = failure;
    write_text(a.out_dir / "report.json", report.dump(2) + "\n");

    const double wall_s = std::chrono::duration<double>(t1 - t0).count();
    json timing;
    timing["wall_s"] = wall_s;
    timing["throughput_per_s"] = wall_s > 0 ? static_cast<double>(results.size()) / wall_s : 0.0;
    json lat = json::array();
    double lat_sum = 0.0;
    for (const auto &r : results) {
      lat.push_back(r.wall_latency_us);
      lat_sum += r.wall_latency_us;
    }
    timing["latency_us"] = lat;
    timing["mean_latency_us"] = results.empty() ? 0.0 : lat_sum / results.size();
    write_text(a.out_dir / "timing.json", timing.dump(2) + "\n");
    write_text(a.out_dir / "stats.json", stats_report_to_json(stats).dump(2) + "\n");

    out << fmt::format("{:<28} {}\n", "requests", inputs.size())
        << fmt::format("{:<28} {}\n", "completed", results.size())
        << fmt::format("{:<28} {}\n", "window", a.window);
    if (accuracy)
      out << fmt::format("{:<28} {:.2f} %\n", "accuracy", 100.0 * *accuracy);
    out << fmt::format("{:<28} {:.2f} /s\n", "wall throughput",
                       timing["throughput_per_s"].get<double>())
        << fmt::format("{:<28} {:.1f} us\n", "wall mean latency",
                       timing["mean_latency_us"].get<double>())
        << fmt::format("{:<28} {:.2f} /s\n", "simulated rate", sim.rate_per_s)
        << fmt::format("{:<28} {:.1f} us\n", "simulated latency", sim.latency_us);
    for (const auto &p : kPrototype)
      out << fmt::format("{:<28} {:.0f} /s, {:.0f} ms\n",
                         fmt::format("FPGA prototype {}", p.model), p.rate_per_s,
                         p.latency_ms);
    if (!failure.empty()) {
      err << "error: " << failure << "\n";
      return failure_code;
    }
    return kExitOk;
  });
}

int cmd_oracle(const OracleArgs &a, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    TensorSet result;
    if (a.fp32) {
      ModelGraph g = load_model(a.model);
      TensorSet ts = make_inputs(a.inputs, a.synthetic, g.graph_inputs, a.seed);
      for (const auto &sample : ts.samples) {
        if (sample.size() != g.graph_inputs.size())
          throw ShapeError("sample tensor count differs from model inputs");
        FloatTensors in;
        for (size_t k = 0; k < sample.size(); ++k)
          in[g.graph_inputs[k].name] = sample[k].to_float();
        auto outs = run_fp32(g, in);
        std::vector<TensorValue> tensors;
        for (const auto &s : g.graph_outputs)
          tensors.push_back(TensorValue::fp32(s.name, s.shape, outs.at(s.name)));
        result.samples.push_back(std::move(tensors));
      }
    } else {
      CompiledModel cm = load_compiled(a.model);
      TensorSet ts = make_inputs(a.inputs, a.synthetic, as_fp32(cm.inputs), a.seed);
      auto inputs = to_codes(ts, cm.inputs, cm.input_scales);
      SequentialExecutor ex(cm, parse_noise(a.noise, a.seed));
      std::vector<std::vector<Codes>> outs;
      // Request numbering matches the orchestrator (first request is 1).
      for (size_t i = 0; i < inputs.size(); ++i)
        outs.push_back(ex.run(inputs[i], i + 1));
      result = codes_to_set(outs, cm.outputs);
    }
    if (!a.out.empty()) {
      if (a.out.has_parent_path())
        fs::create_directories(a.out.parent_path());
      save_tensor_set(result, a.out);
    }
    out << "oracle: " << result.samples.size() << " samples"
        << (a.out.empty() ? "" : " -> " + a.out.string()) << "\n";
    return kExitOk;
  });
}

int cmd_stats(const StatsArgs &a, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    StatsReport r;
    if (fs::exists(a.dir / "stats.json")) {
      json j = read_json(a.dir / "stats.json");
      for (const auto &b : j.at("boards")) {
        auto bs = board_stats_from_json(b);
        r.boards[bs.board] = bs;
      }
    } else {
      if (!fs::is_directory(a.dir))
        throw IOError("'" + a.dir.string() + "' is not a directory");
      std::vector<fs::path> files;
      for (const auto &e : fs::directory_iterator(a.dir))
        if (e.path().filename().string().ends_with(".stats.json"))
          files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto &f : files) {
        auto bs = board_stats_from_json(read_json(f));
        r.boards[bs.board] = bs;
      }
      if (files.empty())
        throw IOError("no statistics found in '" + a.dir.string() + "'");
    }
    out << fmt::format("{:>5}  {:<16} {:>11} {:>12} {:>9} {:>10} {:>10}\n", "board",
                       "node", "invocations", "kernel_us", "max_queue", "bytes_in",
                       "bytes_out");
    for (const auto &[id, b] : r.boards) {
      if (b.missing) {
        out << fmt::format("{:>5}  (missing)\n", id);
        continue;
      }
      for (const auto &[node, s] : b.nodes)
        out << fmt::format("{:>5}  {:<16} {:>11} {:>12.1f} {:>9} {:>10} {:>10}\n", id,
                           node, s.invocations, s.kernel_us, s.max_queue_depth,
                           s.bytes_in, s.bytes_out);
    }
    out << fmt::format("\n{:>8}  {:>10} {:>12} {:>10} {:>12}\n", "channel", "msgs_sent",
                       "bytes_sent", "msgs_recv", "bytes_recv");
    for (const auto &[ch, l] : r.links())
      out << fmt::format("{:>8}  {:>10} {:>12} {:>10} {:>12}\n", ch, l.messages_sent,
                         l.bytes_sent, l.messages_received, l.bytes_received);
    return kExitOk;
  });
}

} // namespace imce
