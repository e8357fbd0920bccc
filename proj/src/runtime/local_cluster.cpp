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

#include "imce/runtime/local_cluster.h"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "imce/errors.h"

extern char **environ;

namespace imce {

std::filesystem::path default_worker_path() {
  if (const char *w = std::getenv("IMCE_WORKER"); w && *w)
    return w;
  std::error_code ec;
  auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    auto p = self.parent_path() / "imce-worker";
    if (std::filesystem::exists(p))
      return p;
  }
  return "imce-worker";
}

namespace {

// Reads the "port <n>" line a worker prints once it listens.
uint16_t read_port(int fd, std::chrono::milliseconds timeout) {
  std::string line;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0)
      throw TimeoutError("worker did not report its port");
    pollfd p{fd, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(left.count())) <= 0)
      continue;
    char c;
    ssize_t n = ::read(fd, &c, 1);
    if (n <= 0)
      throw IOError("worker exited before reporting its port");
    if (c == '\n')
      break;
    line += c;
  }
  auto sp = line.rfind(' ');
  try {
    return static_cast<uint16_t>(std::stoi(line.substr(sp + 1)));
  } catch (const std::exception &) {
    throw IOError("unexpected worker banner '" + line + "'");
  }
}

} // namespace

LocalCluster::LocalCluster(const std::vector<BoardInfo> &boards,
                           const LocalClusterOptions &opts) {
  const auto worker = opts.worker.empty() ? default_worker_path() : opts.worker;
  try {
    for (const auto &b : boards) {
      int fds[2];
      if (::pipe(fds) != 0)
        throw IOError(std::string("pipe: ") + std::strerror(errno));
      posix_spawn_file_actions_t fa;
      posix_spawn_file_actions_init(&fa);
      posix_spawn_file_actions_adddup2(&fa, fds[1], STDOUT_FILENO);
      posix_spawn_file_actions_addclose(&fa, fds[0]);
      posix_spawn_file_actions_addclose(&fa, fds[1]);
      std::vector<std::string> args = {worker.string(),
                                       "--listen",
                                       "127.0.0.1:0",
                                       "--role",
                                       b.accel == AccelClass::An ? "an" : "di",
                                       "--threads",
                                       std::to_string(opts.threads),
                                       "--log-level",
                                       opts.log_level};
      if (opts.pace)
        args.push_back("--pace");
      std::vector<char *> argv;
      for (auto &a : args)
        argv.push_back(a.data());
      argv.push_back(nullptr);
      pid_t pid = 0;
      int rc = posix_spawn(&pid, worker.c_str(), &fa, nullptr, argv.data(), environ);
      posix_spawn_file_actions_destroy(&fa);
      ::close(fds[1]);
      if (rc != 0) {
        ::close(fds[0]);
        throw IOError("cannot start worker '" + worker.string() +
                      "': " + std::strerror(rc));
      }
      pids_[b.id] = pid;
      try {
        uint16_t port = read_port(fds[0], std::chrono::seconds(10));
        addresses_[b.id] = Endpoint{"127.0.0.1", port};
      } catch (...) {
        ::close(fds[0]);
        throw;
      }
      ::close(fds[0]);
    }
  } catch (...) {
    terminate();
    throw;
  }
}

LocalCluster::~LocalCluster() { terminate(); }

void LocalCluster::terminate() {
  // Give workers that received Shutdown a moment to exit on their own.
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
  for (auto &[id, pid] : pids_) {
    if (pid <= 0)
      continue;
    int status = 0;
    while (::waitpid(pid, &status, WNOHANG) == 0) {
      if (std::chrono::steady_clock::now() >= deadline) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    pid = -1;
  }
}

LocalDeployment deploy_local(const PlanBundle &bundle,
                             const LocalClusterOptions &opts,
                             const ClusterOptions &copts) {
  LocalDeployment d;
  d.workers = std::make_unique<LocalCluster>(bundle.plan.boards, opts);
  d.handle = ClusterHandle::configure(bundle, d.workers->addresses(), copts);
  return d;
}

} // namespace imce
