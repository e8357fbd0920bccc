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

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "imce/runtime/protocol.h"

namespace imce {

struct Endpoint {
  std::string host = "127.0.0.1";
  uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Parses "host:port" (host may be empty -> 127.0.0.1). Throws ConfigError.
Endpoint parse_endpoint(const std::string &s);

/// Blocking TCP stream carrying ComMessage frames. send() is thread-safe;
/// receive() must be called from one thread at a time.
class Connection {
 public:
  explicit Connection(int fd);
  ~Connection();
  Connection(const Connection &) = delete;
  Connection &operator=(const Connection &) = delete;

  /// Throws TimeoutError / IOError.
  static std::unique_ptr<Connection>
  connect(const Endpoint &ep, std::chrono::milliseconds timeout);

  /// Throws IOError when the peer is gone.
  void send(const ComMessage &m);
  /// nullopt on orderly close or timeout (timed_out() tells which).
  /// Throws ProtocolError on malformed frames, IOError on socket errors.
  std::optional<ComMessage>
  receive(std::optional<std::chrono::milliseconds> timeout = std::nullopt);
  bool timed_out() const { return timed_out_; }

  /// Unblocks pending receive() calls; further sends fail.
  void shutdown();
  int fd() const { return fd_; }
  uint64_t bytes_sent() const { return bytes_sent_; }
  uint64_t bytes_received() const { return bytes_received_; }

 private:
  int fd_;
  std::mutex send_mu_;
  FrameDecoder decoder_;
  bool timed_out_ = false;
  uint64_t bytes_sent_ = 0;
  uint64_t bytes_received_ = 0;
};

class Listener {
 public:
  /// Binds and listens; port 0 picks a free port.
  explicit Listener(const Endpoint &ep);
  ~Listener();
  Listener(const Listener &) = delete;
  Listener &operator=(const Listener &) = delete;

  uint16_t port() const { return port_; }
  /// nullptr once closed.
  std::unique_ptr<Connection> accept();
  void close();

 private:
  int fd_;
  uint16_t port_ = 0;
};

} // namespace imce
