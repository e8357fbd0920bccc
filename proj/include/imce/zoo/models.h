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
#include <random>
#include <string>
#include <vector>

#include "imce/ir/graph.h"

namespace imce {

/// Deterministic uniform double in [0, 1) from a 64-bit engine; unlike the
/// std distributions it is identical across standard libraries.
double uniform01(std::mt19937_64 &rng);
double gaussian(std::mt19937_64 &rng);

/// Small helper for assembling FP32 model graphs with seeded random
/// weights. Every method returns the name of the tensor it produces.
class GraphBuilder {
 public:
  GraphBuilder(std::string name, uint64_t seed);

  std::string input(const std::string &name, Shape shape);
  void output(const std::string &tensor);

  std::string conv(const std::string &x, int64_t cout, int64_t k,
                   int64_t stride = 1, int64_t pad = 0,
                   OpKind kind = OpKind::Conv2D, int64_t group = 1,
                   bool bias = true, const std::string &id = {});
  std::string mvm(const std::string &x, int64_t out, bool bias = true,
                  const std::string &id = {});
  std::string add(const std::string &a, const std::string &b,
                  OpKind kind = OpKind::Add, const std::string &id = {});
  std::string unary(OpKind kind, const std::string &x, const std::string &id = {});
  std::string mul(const std::string &a, const std::string &b,
                  const std::string &id = {});
  /// Mul(x, Sigmoid(x)): the unfused SiLU pattern.
  std::string silu_pattern(const std::string &x, const std::string &id = {});
  std::string pool(OpKind kind, const std::string &x, int64_t k, int64_t stride,
                   int64_t pad = 0, const std::string &id = {});
  std::string concat(const std::vector<std::string> &xs, int64_t axis,
                     const std::string &id = {});
  std::vector<std::string> split(const std::string &x, int64_t axis,
                                 const std::vector<int64_t> &sizes,
                                 const std::string &id = {});
  std::string flatten(const std::string &x, const std::string &id = {});
  std::string constant(const std::string &name, Shape shape, float lo, float hi);

  /// Shape of an existing tensor (shapes are inferred eagerly).
  const Shape &shape(const std::string &tensor) const;
  std::mt19937_64 &rng() { return rng_; }

  /// Validated graph with inferred shapes.
  ModelGraph build() const;

 private:
  std::string next_id(const std::string &prefix, const std::string &id);
  std::string add_node(GraphNode n);
  TensorValue random_tensor(const std::string &name, Shape shape, double limit);

  ModelGraph g_;
  std::mt19937_64 rng_;
  std::map<std::string, int> counters_;
};

/// ResNet8 structural replica in accelerator form: 14 nodes
/// (9 conv-class, 1 average pool, 1 MVM, 3 FusedAddReLU), CIFAR-sized input.
ModelGraph resnet8(uint64_t seed);
/// The same network before fusion: separate ReLUs and a Flatten (22 nodes).
ModelGraph resnet8_raw(uint64_t seed);
/// ResNet18 replica with reduced widths: 30 nodes (22 An-class, 8 Add).
ModelGraph resnet18s(uint64_t seed);
/// `stages` FusedConvReLU layers of `channels` channels on hw x hw maps.
ModelGraph conv_chain(int stages, int64_t channels, int64_t hw, uint64_t seed);
/// Detection-head style block: Conv+SiLU, Split, Concat, MaxPool.
ModelGraph yolo_snippet(uint64_t seed);
/// The digits classifier architecture with random weights:
/// conv 1->8, conv 8->16 /2, conv 16->16, avgpool 2, flatten, MVM 144->10.
ModelGraph digits_cnn(uint64_t seed);

/// Model by name: resnet8, resnet8-raw, resnet18s, chain, yolo, digits.
ModelGraph model_by_name(const std::string &name, uint64_t seed);
std::vector<std::string> model_names();

} // namespace imce
