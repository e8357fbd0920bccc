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

#include "imce/zoo/models.h"

#include <cmath>
#include <numbers>

#include "imce/errors.h"

namespace imce {

double uniform01(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double gaussian(std::mt19937_64 &rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

GraphBuilder::GraphBuilder(std::string name, uint64_t seed) : rng_(seed) {
  g_.name = std::move(name);
}

std::string GraphBuilder::next_id(const std::string &prefix, const std::string &id) {
  if (!id.empty())
    return id;
  return prefix + std::to_string(++counters_[prefix]);
}

std::string GraphBuilder::add_node(GraphNode n) {
  if (n.outputs.empty())
    n.outputs.push_back(n.id);
  std::string out = n.outputs.front();
  g_.nodes.push_back(std::move(n));
  infer_shapes(g_);
  return out;
}

TensorValue GraphBuilder::random_tensor(const std::string &name, Shape shape,
                                        double limit) {
  std::vector<float> v(static_cast<size_t>(num_elements(shape)));
  for (auto &x : v)
    x = static_cast<float>((2.0 * uniform01(rng_) - 1.0) * limit);
  return TensorValue::fp32(name, std::move(shape), std::move(v));
}

const Shape &GraphBuilder::shape(const std::string &t) const {
  for (const auto &s : g_.graph_inputs)
    if (s.name == t)
      return s.shape;
  if (auto it = g_.initializers.find(t); it != g_.initializers.end())
    return it->second.shape();
  auto it = g_.value_info.find(t);
  if (it == g_.value_info.end())
    throw ShapeError("unknown tensor '" + t + "'");
  return it->second.shape;
}

std::string GraphBuilder::input(const std::string &name, Shape shape) {
  g_.graph_inputs.push_back(TensorSpec{name, std::move(shape), DType::FP32});
  return name;
}

void GraphBuilder::output(const std::string &t) {
  g_.graph_outputs.push_back(TensorSpec{t, shape(t), DType::FP32});
}

std::string GraphBuilder::conv(const std::string &x, int64_t cout, int64_t k,
                               int64_t stride, int64_t pad, OpKind kind,
                               int64_t group, bool bias, const std::string &id) {
  const int64_t cin = shape(x).at(1);
  GraphNode n;
  n.id = next_id("conv", id);
  n.kind = kind;
  const int64_t fan_in = cin / group * k * k;
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  g_.initializers.emplace(n.id + ".w",
                          random_tensor(n.id + ".w", {cout, cin / group, k, k}, limit));
  n.inputs = {x, n.id + ".w"};
  if (bias) {
    g_.initializers.emplace(n.id + ".b", random_tensor(n.id + ".b", {cout}, 0.1));
    n.inputs.push_back(n.id + ".b");
  }
  n.attrs["kernel_shape"] = std::vector<int64_t>{k, k};
  n.attrs["strides"] = std::vector<int64_t>{stride, stride};
  n.attrs["pads"] = std::vector<int64_t>{pad, pad};
  n.attrs["group"] = group;
  return add_node(std::move(n));
}

std::string GraphBuilder::mvm(const std::string &x, int64_t out, bool bias,
                              const std::string &id) {
  const int64_t in = num_elements(shape(x));
  GraphNode n;
  n.id = next_id("fc", id);
  n.kind = OpKind::MVM;
  const double limit = std::sqrt(6.0 / static_cast<double>(in));
  g_.initializers.emplace(n.id + ".w", random_tensor(n.id + ".w", {out, in}, limit));
  n.inputs = {x, n.id + ".w"};
  if (bias) {
    g_.initializers.emplace(n.id + ".b", random_tensor(n.id + ".b", {out}, 0.1));
    n.inputs.push_back(n.id + ".b");
  }
  return add_node(std::move(n));
}

std::string GraphBuilder::add(const std::string &a, const std::string &b,
                              OpKind kind, const std::string &id) {
  GraphNode n;
  n.id = next_id("add", id);
  n.kind = kind;
  n.inputs = {a, b};
  return add_node(std::move(n));
}

std::string GraphBuilder::unary(OpKind kind, const std::string &x,
                                const std::string &id) {
  std::string prefix(to_string(kind));
  for (auto &c : prefix)
    c = static_cast<char>(std::tolower(c));
  GraphNode n;
  n.id = next_id(prefix, id);
  n.kind = kind;
  n.inputs = {x};
  return add_node(std::move(n));
}

std::string GraphBuilder::mul(const std::string &a, const std::string &b,
                              const std::string &id) {
  GraphNode n;
  n.id = next_id("mul", id);
  n.kind = OpKind::Mul;
  n.inputs = {a, b};
  return add_node(std::move(n));
}

std::string GraphBuilder::silu_pattern(const std::string &x, const std::string &id) {
  std::string s = unary(OpKind::Sigmoid, x, id.empty() ? "" : id + "_sig");
  return mul(x, s, id.empty() ? "" : id + "_mul");
}

std::string GraphBuilder::pool(OpKind kind, const std::string &x, int64_t k,
                               int64_t stride, int64_t pad, const std::string &id) {
  GraphNode n;
  n.id = next_id(kind == OpKind::MaxPool ? "maxpool" : "avgpool", id);
  n.kind = kind;
  n.inputs = {x};
  n.attrs["kernel_shape"] = std::vector<int64_t>{k, k};
  n.attrs["strides"] = std::vector<int64_t>{stride, stride};
  n.attrs["pads"] = std::vector<int64_t>{pad, pad};
  return add_node(std::move(n));
}

std::string GraphBuilder::concat(const std::vector<std::string> &xs, int64_t axis,
                                 const std::string &id) {
  GraphNode n;
  n.id = next_id("concat", id);
  n.kind = OpKind::Concat;
  n.inputs = xs;
  n.attrs["axis"] = axis;
  return add_node(std::move(n));
}

std::vector<std::string> GraphBuilder::split(const std::string &x, int64_t axis,
                                             const std::vector<int64_t> &sizes,
                                             const std::string &id) {
  GraphNode n;
  n.id = next_id("split", id);
  n.kind = OpKind::Split;
  n.inputs = {x};
  n.attrs["axis"] = axis;
  n.attrs["split"] = sizes;
  for (size_t i = 0; i < sizes.size(); ++i)
    n.outputs.push_back(n.id + "_" + std::to_string(i));
  auto outs = n.outputs;
  add_node(std::move(n));
  return outs;
}

std::string GraphBuilder::flatten(const std::string &x, const std::string &id) {
  return unary(OpKind::Flatten, x, id);
}

std::string GraphBuilder::constant(const std::string &name, Shape shape, float lo,
                                   float hi) {
  std::vector<float> v(static_cast<size_t>(num_elements(shape)));
  for (auto &x : v)
    x = lo + static_cast<float>(uniform01(rng_)) * (hi - lo);
  g_.initializers.emplace(name, TensorValue::fp32(name, std::move(shape), std::move(v)));
  return name;
}

ModelGraph GraphBuilder::build() const {
  ModelGraph g = g_;
  validate(g);
  infer_shapes(g);
  return g;
}

namespace {

// Basic residual block: conv-relu, conv, (1x1 shortcut), add-relu.
std::string res_block(GraphBuilder &b, const std::string &x, int64_t cout,
                      int64_t stride, bool fused, const std::string &tag) {
  const int64_t cin = b.shape(x).at(1);
  std::string h;
  if (fused) {
    h = b.conv(x, cout, 3, stride, 1, OpKind::FusedConvReLU, 1, true, tag + "a");
  } else {
    h = b.conv(x, cout, 3, stride, 1, OpKind::Conv2D, 1, true, tag + "a");
    h = b.unary(OpKind::ReLU, h, tag + "a_relu");
  }
  h = b.conv(h, cout, 3, 1, 1, OpKind::Conv2D, 1, true, tag + "b");
  std::string sc = x;
  if (stride != 1 || cin != cout)
    sc = b.conv(x, cout, 1, stride, 0, OpKind::Conv2D, 1, true, tag + "s");
  if (fused)
    return b.add(h, sc, OpKind::FusedAddReLU, tag + "add");
  std::string y = b.add(h, sc, OpKind::Add, tag + "add");
  return b.unary(OpKind::ReLU, y, tag + "add_relu");
}

ModelGraph resnet8_impl(uint64_t seed, bool fused) {
  GraphBuilder b(fused ? "resnet8" : "resnet8-raw", seed);
  std::string x = b.input("image", {1, 3, 32, 32});
  std::string h;
  if (fused) {
    h = b.conv(x, 16, 3, 1, 1, OpKind::FusedConvReLU, 1, true, "stem");
  } else {
    h = b.conv(x, 16, 3, 1, 1, OpKind::Conv2D, 1, true, "stem");
    h = b.unary(OpKind::ReLU, h, "stem_relu");
  }
  h = res_block(b, h, 16, 1, fused, "s1");
  h = res_block(b, h, 32, 2, fused, "s2");
  h = res_block(b, h, 64, 2, fused, "s3");
  h = b.pool(OpKind::AvgPool, h, 8, 8, 0, "pool");
  if (!fused)
    h = b.flatten(h, "flatten");
  h = b.mvm(h, 10, true, "fc");
  b.output(h);
  return b.build();
}

} // namespace

ModelGraph resnet8(uint64_t seed) { return resnet8_impl(seed, true); }
ModelGraph resnet8_raw(uint64_t seed) { return resnet8_impl(seed, false); }

ModelGraph resnet18s(uint64_t seed) {
  GraphBuilder b("resnet18s", seed);
  std::string h = b.input("image", {1, 3, 32, 32});
  h = b.conv(h, 16, 3, 1, 1, OpKind::FusedConvReLU, 1, true, "stem");
  const int64_t widths[4] = {16, 32, 64, 128};
  for (int s = 0; s < 4; ++s)
    for (int k = 0; k < 2; ++k) {
      const int64_t stride = (s > 0 && k == 0) ? 2 : 1;
      h = res_block(b, h, widths[s], stride, true,
                    "l" + std::to_string(s + 1) + std::string(1, char('a' + k)));
    }
  h = b.pool(OpKind::AvgPool, h, 4, 4, 0, "pool");
  h = b.mvm(h, 10, true, "fc");
  b.output(h);
  return b.build();
}

ModelGraph conv_chain(int stages, int64_t channels, int64_t hw, uint64_t seed) {
  GraphBuilder b("chain" + std::to_string(stages), seed);
  std::string h = b.input("x", {1, channels, hw, hw});
  for (int i = 0; i < stages; ++i)
    h = b.conv(h, channels, 3, 1, 1, OpKind::FusedConvReLU, 1, true,
               "stage" + std::to_string(i + 1));
  b.output(h);
  return b.build();
}

ModelGraph yolo_snippet(uint64_t seed) {
  GraphBuilder b("yolo-snippet", seed);
  std::string x = b.input("x", {1, 8, 16, 16});
  std::string h = b.conv(x, 16, 3, 1, 1, OpKind::Conv2D, 1, true, "cv1");
  h = b.silu_pattern(h, "cv1_act");
  auto parts = b.split(h, 1, {8, 8}, "split");
  std::string m = b.conv(parts[1], 8, 3, 1, 1, OpKind::Conv2D, 1, true, "m1");
  m = b.silu_pattern(m, "m1_act");
  std::string r = b.add(m, parts[1], OpKind::Add, "m1_res");
  std::string c = b.concat({parts[0], parts[1], r}, 1, "cat");
  h = b.conv(c, 16, 1, 1, 0, OpKind::Conv2D, 1, true, "cv2");
  h = b.silu_pattern(h, "cv2_act");
  std::string p = b.pool(OpKind::MaxPool, h, 2, 2, 0, "pool");
  std::string s = b.unary(OpKind::SiLU, p, "head_act");
  b.output(s);
  return b.build();
}

ModelGraph digits_cnn(uint64_t seed) {
  GraphBuilder b("digits", seed);
  std::string h = b.input("image", {1, 1, 12, 12});
  h = b.conv(h, 8, 3, 1, 1, OpKind::Conv2D, 1, true, "conv1");
  h = b.unary(OpKind::ReLU, h, "relu1");
  h = b.conv(h, 16, 3, 2, 1, OpKind::Conv2D, 1, true, "conv2");
  h = b.unary(OpKind::ReLU, h, "relu2");
  h = b.conv(h, 16, 3, 1, 1, OpKind::Conv2D, 1, true, "conv3");
  h = b.unary(OpKind::ReLU, h, "relu3");
  h = b.pool(OpKind::AvgPool, h, 2, 2, 0, "pool");
  h = b.flatten(h, "flatten");
  h = b.mvm(h, 10, true, "fc");
  b.output(h);
  return b.build();
}

std::vector<std::string> model_names() {
  return {"resnet8", "resnet8-raw", "resnet18s", "chain", "yolo", "digits"};
}

ModelGraph model_by_name(const std::string &name, uint64_t seed) {
  if (name == "resnet8")
    return resnet8(seed);
  if (name == "resnet8-raw")
    return resnet8_raw(seed);
  if (name == "resnet18s")
    return resnet18s(seed);
  if (name == "chain")
    return conv_chain(6, 16, 16, seed);
  if (name == "yolo")
    return yolo_snippet(seed);
  if (name == "digits")
    return digits_cnn(seed);
  throw ConfigError("unknown model '" + name + "'");
}

} // namespace imce
