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

// Operator toolchain: compile, map, run, oracle, stats.

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "imce/cli/toolchain.h"

int main(int argc, char **argv) {
  CLI::App app{"IMCE emulator toolchain"};
  app.require_subcommand(1);
  uint64_t seed = 0;
  std::string log_level = "warn";
  app.add_option("--seed", seed, "seed for every generator and noise draw");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  imce::CompileArgs ca;
  auto *compile = app.add_subcommand("compile", "optimize, fuse, quantize and lower a model");
  compile->add_option("model", ca.model, "model JSON")->required();
  compile->add_option("-c,--calibration", ca.calibration, "calibration tensor set");
  compile->add_option("-o,--out", ca.out_dir, "output directory")->required();
  compile->add_flag("--strict-ranges", ca.strict_ranges,
                    "fail on tensors with an all-zero range");
  compile->add_flag("--avgpool-on-di", ca.avgpool_on_di,
                    "run average pooling on the digital accelerator");

  imce::MapArgs ma;
  auto *map = app.add_subcommand("map", "assign nodes to boards and emit board configs");
  map->add_option("compiled", ma.compiled_dir, "compiled model directory")->required();
  map->add_option("--hw", ma.hw_info, "hardware description JSON")->required();
  map->add_option("-s,--strategy", ma.strategy, "loadbalance, mincut, roundrobin");
  map->add_option("-o,--out", ma.out_dir, "output directory")->required();

  imce::RunArgs ra;
  bool remote = false;
  auto *run = app.add_subcommand("run", "run inference on a deployed cluster");
  auto *deploy = run->add_option("deploy", ra.deploy_dir, "output directory of map");
  auto *manifest =
      run->add_option("-m,--manifest", ra.manifest, "run manifest (compiles and maps first)");
  deploy->excludes(manifest);
  run->add_option("-i,--inputs", ra.inputs, "input tensor set");
  run->add_option("--synthetic", ra.synthetic, "generated inputs: uniform:N or digits:N");
  run->add_option("-o,--out", ra.out_dir, "output directory")->required();
  run->add_option("-w,--window", ra.window, "requests in flight");
  run->add_option("--noise", ra.noise, "sigma_prog=..,sigma_read=..");
  run->add_flag("--local", ra.local, "spawn workers on loopback (default)");
  run->add_flag("--remote", remote, "connect to the addresses in the hardware description");
  run->add_option("--threads", ra.threads, "kernel threads per worker");
  run->add_flag("--pace", ra.pace, "workers hold nodes for their cost hint");
  run->add_option("--worker", ra.worker, "worker executable");
  run->add_option("--worker-log-level", ra.worker_log_level, "worker log level");

  imce::OracleArgs oa;
  auto *oracle = app.add_subcommand("oracle", "sequential reference execution");
  oracle->add_option("model", oa.model, "compiled directory (or model JSON with --fp32)")
      ->required();
  oracle->add_option("-i,--inputs", oa.inputs, "input tensor set");
  oracle->add_option("--synthetic", oa.synthetic, "generated inputs: uniform:N or digits:N");
  oracle->add_option("-o,--out", oa.out, "output tensor set");
  oracle->add_flag("--fp32", oa.fp32, "un-quantized FP32 reference");
  oracle->add_option("--noise", oa.noise, "sigma_prog=..,sigma_read=..");

  imce::StatsArgs sa;
  auto *stats = app.add_subcommand("stats", "print collected board statistics");
  stats->add_option("dir", sa.dir, "run directory or statistics directory")->required();

  CLI11_PARSE(app, argc, argv);

  spdlog::set_default_logger(spdlog::stderr_color_mt("imce"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  if (compile->parsed()) {
    ca.seed = seed;
    return imce::cmd_compile(ca, std::cout, std::cerr);
  }
  if (map->parsed())
    return imce::cmd_map(ma, std::cout, std::cerr);
  if (run->parsed()) {
    if (ra.deploy_dir.empty() && ra.manifest.empty()) {
      std::cerr << "error: give a deploy directory or --manifest\n";
      return imce::kExitInvalid;
    }
    ra.local = !remote;
    ra.seed = seed;
    return imce::cmd_run(ra, std::cout, std::cerr);
  }
  if (oracle->parsed()) {
    oa.seed = seed;
    return imce::cmd_oracle(oa, std::cout, std::cerr);
  }
  return imce::cmd_stats(sa, std::cout, std::cerr);
}
