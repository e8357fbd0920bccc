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

// Emulated processing-unit board: listens for an orchestrator, executes the
// nodes it is configured with and exchanges tensors with peer boards.

#include <csignal>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "imce/errors.h"
#include "imce/runtime/worker.h"

int main(int argc, char **argv) {
  CLI::App app{"IMCE emulated board"};
  std::string listen = "127.0.0.1:0";
  std::string role = "an";
  int threads = 4;
  bool pace = false;
  std::string log_level = "info";
  app.add_option("--listen", listen, "host:port to listen on (port 0 picks one)");
  app.add_option("--role", role, "accelerator class of this board")
      ->check(CLI::IsMember({"an", "di"}));
  app.add_option("--threads", threads, "kernels executing concurrently")
      ->check(CLI::PositiveNumber);
  app.add_flag("--pace", pace, "hold each node for its cost hint");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");
  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("worker");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));
  std::signal(SIGPIPE, SIG_IGN);

  try {
    imce::WorkerOptions opts;
    opts.listen = imce::parse_endpoint(listen);
    opts.role = role == "an" ? imce::AccelClass::An : imce::AccelClass::Di;
    opts.threads = threads;
    opts.pace = pace;
    imce::Worker worker(opts);
    // The launcher reads the port from the last token of this line.
    std::printf("imce-worker listening on port %u\n", worker.port());
    std::fflush(stdout);
    worker.serve();
  } catch (const std::exception &e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
