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

#include <memory>

#include "imce/compiler/compiled_model.h"
#include "imce/runtime/socket.h"

namespace imce {

struct WorkerOptions {
  Endpoint listen;
  AccelClass role = AccelClass::An;
  /// Kernels allowed to execute concurrently on this board.
  int threads = 4;
  /// Hold each node busy for at least its cost hint (accelerator occupancy).
  bool pace = false;
};

/// One emulated processing unit. Control protocol on a control connection:
///   Hello{"kind":"control"}           -> Ack
///   Configure{"phase":"load",...}     -> Ack   board configuration JSON
///   Weights(blob)                     -> Ack   builds F-threads
///   Configure{"phase":"connect",...}  -> Ack   opens outbound S-links
///   Infer(channel = input index)      -> Tensor(channel = 0x80000000 + output)
///   Stats                             -> Stats(JSON)
///   Shutdown                          -> Ack, then the worker exits
/// S-link connections start with Hello{"kind":"slink","channel":c} and then
/// carry Tensor frames only.
class Worker {
 public:
  explicit Worker(WorkerOptions opts);
  ~Worker();

  uint16_t port() const;
  /// Blocks until Shutdown or stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace imce
