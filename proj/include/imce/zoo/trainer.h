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

#include <cstdint>
#include <vector>

#include "imce/ir/graph.h"
#include "imce/zoo/digits.h"

namespace imce {

struct TrainOptions {
  int epochs = 10;
  int batch = 32;
  double learning_rate = 3e-3;
  uint64_t seed = 1;
};

struct TrainLog {
  /// Mean cross-entropy per epoch.
  std::vector<double> epoch_loss;
};

/// Trains the digits_cnn() architecture in FP32 (Adam, softmax
/// cross-entropy) and returns the graph with the trained initializers.
ModelGraph train_digits(const Dataset &train, const TrainOptions &opts = {},
                        TrainLog *log = nullptr);

/// Top-1 accuracy of a single-input classifier under the FP32 interpreter.
double fp32_accuracy(const ModelGraph &g, const Dataset &ds);

} // namespace imce
