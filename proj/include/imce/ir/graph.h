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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "imce/ir/tensor.h"

namespace imce {

enum class OpKind : uint8_t {
  Conv2D,
  FusedConvReLU,
  FusedConvSiLU,
  MVM,
  Add,
  FusedAddReLU,
  ReLU,
  Sigmoid,
  Mul,
  SiLU,
  MaxPool,
  AvgPool,
  Concat,
  Split,
  Flatten,
  Reshape,
  QuantizeLinear,
  DequantizeLinear,
};

std::string_view to_string(OpKind k);
OpKind op_kind_from_string(std::string_view s);
const std::vector<OpKind> &all_op_kinds();

/// Input/output count contract for a kind. max_inputs < 0 means unbounded;
/// outputs < 0 means "one per split size".
struct Arity {
  int min_inputs;
  int max_inputs;
  int outputs;
};
Arity arity(OpKind k);

/// Attribute names every node of this kind must carry.
std::vector<std::string_view> required_attrs(OpKind k);

bool is_conv_class(OpKind k);
bool is_add_class(OpKind k);

using AttrValue = std::variant<int64_t, double, std::vector<int64_t>>;
using Attrs = std::map<std::string, AttrValue>;

int64_t attr_int(const Attrs &a, const std::string &key);
int64_t attr_int(const Attrs &a, const std::string &key, int64_t fallback);
double attr_float(const Attrs &a, const std::string &key);
std::vector<int64_t> attr_ints(const Attrs &a, const std::string &key);
std::vector<int64_t> attr_ints(const Attrs &a, const std::string &key,
                               std::vector<int64_t> fallback);

struct GraphNode {
  std::string id;
  OpKind kind = OpKind::Conv2D;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Attrs attrs;
  /// Tensor name -> quantization parameters, for tensors this node touches.
  std::map<std::string, QuantParams> quant;

  bool operator==(const GraphNode &) const = default;
};

struct ModelGraph {
  std::string name;
  std::vector<GraphNode> nodes;
  std::map<std::string, TensorValue> initializers;
  std::vector<TensorSpec> graph_inputs;
  std::vector<TensorSpec> graph_outputs;
  /// Shapes of intermediate tensors; filled by infer_shapes().
  std::map<std::string, TensorSpec> value_info;

  const GraphNode *find_node(std::string_view id) const;
  GraphNode *find_node(std::string_view id);
  /// Index of the node producing `tensor`, or nullopt for graph inputs and
  /// initializers.
  std::optional<size_t> producer(std::string_view tensor) const;
  /// Indices of nodes consuming `tensor` (a node appears once even if it
  /// consumes the tensor twice).
  std::vector<size_t> consumers(std::string_view tensor) const;
  bool is_graph_input(std::string_view tensor) const;
  bool is_graph_output(std::string_view tensor) const;
  bool is_initializer(std::string_view tensor) const {
    return initializers.count(std::string(tensor)) != 0;
  }
  /// Spec of any tensor: graph input/output, initializer or value_info entry.
  std::optional<TensorSpec> spec_of(std::string_view tensor) const;
  /// Quantization parameters recorded on any node for `tensor`.
  std::optional<QuantParams> quant_of(std::string_view tensor) const;

  bool operator==(const ModelGraph &) const = default;
};

/// Checks every structural invariant. Throws ValidationError (or CycleError)
/// naming the offending node or tensor.
void validate(const ModelGraph &g);

/// Recomputes value_info for every node output from graph input shapes.
/// Throws ShapeError on inconsistent shapes.
void infer_shapes(ModelGraph &g);

/// Node ids such that producers precede consumers; ties go to the smallest id.
std::vector<std::string> topological_order(const ModelGraph &g);

/// Producer->consumer relation between nodes, indexed by `ids`.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(std::vector<std::string> ids);

  size_t size() const { return ids_.size(); }
  const std::vector<std::string> &ids() const { return ids_; }
  bool at(size_t i, size_t j) const { return bits_[i * ids_.size() + j] != 0; }
  void set(size_t i, size_t j, bool v = true) {
    bits_[i * ids_.size() + j] = v ? 1 : 0;
  }
  size_t index_of(std::string_view id) const;
  /// All (i, j) pairs with at(i, j), row-major order.
  std::vector<std::pair<size_t, size_t>> edges() const;

  bool operator==(const Adjacency &) const = default;

 private:
  std::vector<std::string> ids_;
  std::vector<uint8_t> bits_;
};

/// Adjacency over nodes in topological order.
Adjacency adjacency(const ModelGraph &g);

} // namespace imce
