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

#include <cmath>
#include <filesystem>
#include <random>
#include <unistd.h>

#include <gtest/gtest.h>

#include "imce/compiler/compiled_io.h"
#include "imce/compiler/passes.h"
#include "imce/compiler/reference.h"
#include "imce/errors.h"
#include "imce/ir/model_io.h"
#include "imce/runtime/executor.h"
#include "imce/zoo/models.h"
#include "oracles.h"

namespace imce {
namespace {

CalibrationSet uniform_cal(const ModelGraph &g, int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  CalibrationSet cal;
  for (int i = 0; i < n; ++i) {
    std::vector<TensorValue> s;
    for (const auto &in : g.graph_inputs) {
      std::vector<float> v(static_cast<size_t>(num_elements(in.shape)));
      for (auto &x : v)
        x = static_cast<float>(2 * uniform01(rng) - 1);
      s.push_back(TensorValue::fp32(in.name, in.shape, v));
    }
    cal.samples.push_back(std::move(s));
  }
  return cal;
}

FloatTensors random_inputs(const ModelGraph &g, std::mt19937_64 &rng) {
  FloatTensors in;
  for (const auto &s : g.graph_inputs) {
    std::vector<float> v(static_cast<size_t>(num_elements(s.shape)));
    for (auto &x : v)
      x = static_cast<float>(2 * uniform01(rng) - 1);
    in[s.name] = v;
  }
  return in;
}

double max_abs_diff(const FloatTensors &a, const FloatTensors &b) {
  double d = 0;
  for (const auto &[k, v] : a) {
    const auto &w = b.at(k);
    EXPECT_EQ(v.size(), w.size()) << k;
    for (size_t i = 0; i < std::min(v.size(), w.size()); ++i)
      d = std::max(d, std::fabs(static_cast<double>(v[i]) - w[i]));
  }
  return d;
}

size_t count_kind(const ModelGraph &g, OpKind k) {
  return static_cast<size_t>(std::count_if(g.nodes.begin(), g.nodes.end(),
                                           [&](const GraphNode &n) { return n.kind == k; }));
}

TEST(Optimize, FlattenRemovedAndMvmRewired) {
  GraphBuilder b("cfm", 1);
  auto x = b.input("x", {1, 2, 4, 4});
  auto c = b.conv(x, 4, 3, 1, 1, OpKind::Conv2D, 1, true, "c");
  auto f = b.flatten(c, "f");
  b.output(b.mvm(f, 5, true, "fc"));
  auto g = b.build();
  auto o = optimize(g);
  ASSERT_EQ(o.nodes.size(), 2u);
  EXPECT_EQ(o.find_node("fc")->inputs[0], c);
  std::mt19937_64 rng(2);
  auto in = random_inputs(g, rng);
  EXPECT_LE(max_abs_diff(run_fp32(g, in), run_fp32(o, in)), 1e-5);
}

TEST(Optimize, FixpointOnCleanGraph) {
  auto g = resnet8(4);
  auto o = optimize(g);
  EXPECT_EQ(o.nodes, g.nodes);
  EXPECT_EQ(o.initializers, g.initializers);
}

TEST(Optimize, ReshapeChainCollapses) {
  ModelGraph g;
  g.name = "rr";
  g.graph_inputs = {TensorSpec{"x", {1, 2, 3, 4}, DType::FP32}};
  g.nodes.push_back(GraphNode{"r1", OpKind::Reshape, {"x"}, {"a"},
                              {{"shape", std::vector<int64_t>{1, 6, 4}}}, {}});
  g.nodes.push_back(GraphNode{"r2", OpKind::Reshape, {"a"}, {"b"},
                              {{"shape", std::vector<int64_t>{1, 24}}}, {}});
  g.initializers.emplace("w", TensorValue::fp32("w", {3, 24}, std::vector<float>(72, 0.25f)));
  g.nodes.push_back(GraphNode{"fc", OpKind::MVM, {"b", "w"}, {"y"}, {}, {}});
  g.graph_outputs = {TensorSpec{"y", {1, 3}, DType::FP32}};
  validate(g);
  infer_shapes(g);
  auto o = optimize(g);
  ASSERT_EQ(o.nodes.size(), 1u);
  EXPECT_EQ(o.nodes[0].inputs[0], "x");
  std::mt19937_64 rng(3);
  auto in = random_inputs(g, rng);
  EXPECT_LE(max_abs_diff(run_fp32(g, in), run_fp32(o, in)), 1e-5);
}

TEST(Optimize, FoldsConstantSubexpressions) {
  GraphBuilder b("fold", 1);
  auto x = b.input("x", {1, 4, 2, 2});
  auto k1 = b.constant("k1", {1, 4, 2, 2}, -1, 1);
  auto k2 = b.constant("k2", {1, 4, 2, 2}, -1, 1);
  auto k = b.add(k1, k2, OpKind::Add, "kk");
  b.output(b.add(x, k, OpKind::Add, "out"));
  auto g = b.build();
  auto o = optimize(g);
  ASSERT_EQ(o.nodes.size(), 1u);
  EXPECT_TRUE(o.is_initializer(o.nodes[0].inputs[1]));
  std::mt19937_64 rng(5);
  auto in = random_inputs(g, rng);
  EXPECT_LE(max_abs_diff(run_fp32(g, in), run_fp32(o, in)), 1e-6);
}

TEST(Fuse, ConvReluBecomesFusedConvRelu) {
  GraphBuilder b("cr", 1);
  auto x = b.input("x", {1, 2, 4, 4});
  auto c = b.conv(x, 4, 3, 1, 1, OpKind::Conv2D, 1, true, "c");
  b.output(b.unary(OpKind::ReLU, c, "r"));
  auto f = fuse(optimize(b.build()));
  ASSERT_EQ(f.nodes.size(), 1u);
  EXPECT_EQ(f.nodes[0].kind, OpKind::FusedConvReLU);
  EXPECT_EQ(f.nodes[0].id, "c");
  EXPECT_EQ(f.nodes[0].outputs[0], "r");
}

TEST(Fuse, SigmoidMulBecomesSilu) {
  GraphBuilder b("silu", 1);
  auto x = b.input("x", {1, 2, 4, 4});
  b.output(b.silu_pattern(x, "act"));
  auto f = fuse(b.build());
  ASSERT_EQ(f.nodes.size(), 1u);
  EXPECT_EQ(f.nodes[0].kind, OpKind::SiLU);
  EXPECT_EQ(f.nodes[0].inputs, (std::vector<std::string>{"x"}));
}

TEST(Fuse, ConvWithTwoConsumersUnchanged) {
  GraphBuilder b("guard", 1);
  auto x = b.input("x", {1, 4, 4, 4});
  auto c = b.conv(x, 4, 1, 1, 0, OpKind::Conv2D, 1, true, "c");
  auto r = b.unary(OpKind::ReLU, c, "r");
  b.output(b.add(r, c, OpKind::Add, "a"));
  auto g = b.build();
  auto f = fuse(g);
  EXPECT_EQ(f.nodes, g.nodes);
}

TEST(Fuse, ConvSiluChainBecomesFusedConvSilu) {
  auto g = yolo_snippet(2);
  auto f = fuse(optimize(g));
  EXPECT_EQ(count_kind(f, OpKind::Sigmoid), 0u);
  EXPECT_EQ(count_kind(f, OpKind::Mul), 0u);
  EXPECT_EQ(count_kind(f, OpKind::FusedConvSiLU), 3u);
  // The trailing SiLU follows a MaxPool and stays on its own.
  EXPECT_EQ(count_kind(f, OpKind::SiLU), 1u);
}

TEST(Fuse, AddReluOnResNetRaw) {
  auto f = fuse(optimize(resnet8_raw(3)));
  EXPECT_EQ(f.nodes.size(), 14u);
  EXPECT_EQ(count_kind(f, OpKind::FusedAddReLU), 3u);
  EXPECT_EQ(count_kind(f, OpKind::FusedConvReLU), 4u);
  EXPECT_EQ(count_kind(f, OpKind::ReLU), 0u);
}

TEST(Fuse, RandomGraphsMatchPatternOracleAndPreserveSemantics) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    auto g = oracle::random_graph(rng, static_cast<int>(oracle::rand_int(rng, 3, 15)));
    auto o = optimize(g);
    auto f = fuse(o);
    const auto expected = oracle::expected_fusions(o);
    std::set<std::pair<std::string, OpKind>> got_sites;
    for (const auto &n : f.nodes) {
      const GraphNode *before = o.find_node(n.id);
      if (before && before->kind != n.kind)
        got_sites.insert({n.id, n.kind});
    }
    EXPECT_EQ(got_sites, expected) << "trial " << trial;
    auto in = random_inputs(g, rng);
    EXPECT_LE(max_abs_diff(run_fp32(g, in), run_fp32(f, in)), 1e-5) << "trial " << trial;
  }
}

TEST(Quantize, WeightScaleIsMaxAbsOver127) {
  GraphBuilder b("q", 1);
  auto x = b.input("x", {1, 4});
  b.output(b.mvm(x, 2, false, "fc"));
  auto g = b.build();
  std::vector<float> w = {0.1f, -0.635f, 0.2f, 0.3f, 0.0f, 0.5f, -0.2f, 0.01f};
  g.initializers.at("fc.w") = TensorValue::fp32("fc.w", {2, 4}, w);
  auto q = quantize(g, uniform_cal(g, 4, 1));
  EXPECT_FLOAT_EQ(q.quant_of("fc.w")->scale, 0.005f);
  auto codes = q.initializers.at("fc.w").data<int8_t>();
  EXPECT_EQ(codes[1], -127);
  EXPECT_EQ(codes[0], 20);
}

TEST(Quantize, AllZeroWeightsFallBackToUnitScale) {
  GraphBuilder b("z", 1);
  auto x = b.input("x", {1, 4});
  b.output(b.mvm(x, 2, true, "fc"));
  auto g = b.build();
  g.initializers.at("fc.w") = TensorValue::fp32("fc.w", {2, 4}, std::vector<float>(8, 0.0f));
  auto q = quantize(g, uniform_cal(g, 2, 1));
  EXPECT_FLOAT_EQ(q.quant_of("fc.w")->scale, 1.0f);
  QuantizeOptions strict;
  strict.strict_ranges = true;
  try {
    quantize(g, uniform_cal(g, 2, 1), strict);
    FAIL();
  } catch (const DegenerateRangeError &e) {
    EXPECT_EQ(e.tensor(), "fc.w");
  }
}

TEST(Quantize, RoundingHalfAwayFromZeroAndSaturation) {
  EXPECT_EQ(quantize_value(0.5f, 1.0f), 1);
  EXPECT_EQ(quantize_value(-0.5f, 1.0f), -1);
  EXPECT_EQ(quantize_value(1.49f, 1.0f), 1);
  EXPECT_EQ(quantize_value(1000.0f, 1.0f), 127);
  EXPECT_EQ(quantize_value(-1000.0f, 1.0f), -127);
}

TEST(Quantize, DequantizeWithinHalfScale) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 2000; ++i) {
    const float range = oracle::rand_scale(rng, 1e-3, 1e3);
    const float scale = range / 127.0f;
    const float v = static_cast<float>((2 * uniform01(rng) - 1) * range);
    const float back = quantize_value(v, scale) * scale;
    EXPECT_LE(std::fabs(back - v), scale / 2 * (1 + 1e-5f)) << v << " " << scale;
  }
}

TEST(Quantize, ThreeNodeConvGraphCloseToFp32) {
  GraphBuilder b("c3", 7);
  auto x = b.input("x", {1, 3, 8, 8});
  auto h = b.conv(x, 8, 3, 1, 1, OpKind::FusedConvReLU, 1, true, "c1");
  h = b.conv(h, 8, 3, 1, 1, OpKind::FusedConvReLU, 1, true, "c2");
  b.output(b.conv(h, 4, 1, 1, 0, OpKind::Conv2D, 1, true, "c3"));
  auto g = b.build();
  // Calibrate on the evaluation inputs so only rounding error remains.
  std::mt19937_64 rng(4);
  std::vector<FloatTensors> samples;
  CalibrationSet cal;
  for (int s = 0; s < 8; ++s) {
    samples.push_back(random_inputs(g, rng));
    cal.samples.push_back({TensorValue::fp32("x", {1, 3, 8, 8}, samples.back()["x"])});
  }
  auto cm = compile(g, cal);
  SequentialExecutor ex(cm);
  double worst = 0;
  for (auto &in : samples) {
    auto ref = run_fp32(g, in).begin()->second;
    auto codes = ex.run({quantize_input(in["x"], cm.input_scales[0].scale)}, 1);
    auto deq = dequantize(codes[0], cm.output_scales[0].scale);
    double peak = 0, err = 0;
    for (size_t i = 0; i < ref.size(); ++i) {
      peak = std::max(peak, std::fabs(static_cast<double>(ref[i])));
      err = std::max(err, std::fabs(static_cast<double>(ref[i]) - deq[i]));
    }
    worst = std::max(worst, err / peak);
  }
  // Three requantized layers: a few output steps of error relative to the peak.
  EXPECT_LT(worst, 0.05);
}

TEST(ReshapeWeights, OneByOneConvPadsTo16) {
  GraphNode n{"c", OpKind::Conv2D, {"x", "w"}, {"y"}, {}, {}};
  std::vector<int8_t> w(32);
  for (int i = 0; i < 32; ++i)
    w[i] = static_cast<int8_t>(i - 16);
  auto m = reshape_weights(n, TensorValue::int8("w", {8, 4, 1, 1}, w));
  ASSERT_EQ(m.rows, 16);
  ASSERT_EQ(m.cols, 16);
  for (int o = 0; o < 16; ++o)
    for (int c = 0; c < 16; ++c)
      EXPECT_EQ(m.at(o, c), (o < 8 && c < 4) ? w[o * 4 + c] : 0);
}

TEST(ReshapeWeights, ColumnOrderIsChannelThenKernelRowThenColumn) {
  GraphNode n{"c", OpKind::Conv2D, {"x", "w"}, {"y"}, {}, {}};
  auto m = reshape_weights(n, TensorValue::int8("w", {2, 1, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8}));
  EXPECT_EQ(m.at(0, 0), 1);
  EXPECT_EQ(m.at(0, 1), 2);
  EXPECT_EQ(m.at(0, 2), 3);
  EXPECT_EQ(m.at(0, 3), 4);
  EXPECT_EQ(m.at(1, 3), 8);
}

TEST(ReshapeWeights, OversizedMatrixIsSizeError) {
  GraphNode n{"c", OpKind::Conv2D, {"x", "w"}, {"y"}, {}, {}};
  EXPECT_THROW(reshape_weights(n, TensorValue::int8("w", {16, 4100, 1, 1},
                                                    std::vector<int8_t>(16 * 4100))),
               SizeError);
  GraphNode f{"fc", OpKind::MVM, {"x", "w"}, {"y"}, {}, {}};
  EXPECT_THROW(reshape_weights(f, TensorValue::int8("w", {513, 16},
                                                    std::vector<int8_t>(513 * 16))),
               SizeError);
  EXPECT_NO_THROW(reshape_weights(f, TensorValue::int8("w", {512, 4096},
                                                       std::vector<int8_t>(512 * 4096))));
}

TEST(Compile, ResNet8Classification) {
  auto g = resnet8(6);
  CompileReport rep;
  auto cm = compile(g, uniform_cal(g, 4, 1), {}, &rep);
  ASSERT_EQ(cm.nodes.size(), 14u);
  for (const auto &n : cm.nodes) {
    if (is_add_class(n.kind()))
      EXPECT_EQ(n.accel, AccelClass::Di) << n.id();
    else
      EXPECT_EQ(n.accel, AccelClass::An) << n.id();
  }
  const auto &pool = cm.nodes[cm.index_of("pool")];
  EXPECT_EQ(pool.kind(), OpKind::Conv2D);
  EXPECT_EQ(pool.origin, "AvgPool");
  EXPECT_TRUE(pool.weights2d.has_value());
  EXPECT_EQ(rep.an_nodes, 11u);
  EXPECT_EQ(rep.di_nodes, 3u);
  EXPECT_EQ(cm.adjacency.size(), cm.nodes.size());
  EXPECT_EQ(cm.fpga_info.size(), cm.nodes.size());
}

TEST(Compile, RawResNet8ReportsPassCounts) {
  auto g = resnet8_raw(6);
  CompileReport rep;
  compile(g, uniform_cal(g, 2, 1), {}, &rep);
  EXPECT_EQ(rep.input_nodes, 22u);
  EXPECT_EQ(rep.after_optimize, 21u);
  EXPECT_EQ(rep.after_fuse, 14u);
}

TEST(Compile, SingleMvmIsOneAnNode) {
  GraphBuilder b("mvm", 1);
  b.output(b.mvm(b.input("x", {1, 32}), 16, true, "fc"));
  auto g = b.build();
  auto cm = compile(g, uniform_cal(g, 2, 1));
  ASSERT_EQ(cm.nodes.size(), 1u);
  EXPECT_EQ(cm.nodes[0].accel, AccelClass::An);
}

TEST(Compile, YoloSnippetUsesFusedConvSiluOnAn) {
  auto g = yolo_snippet(1);
  auto cm = compile(g, uniform_cal(g, 4, 1));
  int fcs = 0;
  for (const auto &n : cm.nodes) {
    if (n.kind() == OpKind::FusedConvSiLU) {
      ++fcs;
      EXPECT_EQ(n.accel, AccelClass::An);
    }
    if (n.kind() == OpKind::SiLU || n.kind() == OpKind::Concat ||
        n.kind() == OpKind::Split || n.kind() == OpKind::MaxPool || is_add_class(n.kind()))
      EXPECT_EQ(n.accel, AccelClass::Di) << n.id();
  }
  EXPECT_EQ(fcs, 3);
}

TEST(Compile, AvgPoolOnDiWhenRequested) {
  auto g = resnet8(2);
  CompileOptions o;
  o.avgpool_on_di = true;
  auto cm = compile(g, uniform_cal(g, 2, 1), o);
  const auto &pool = cm.nodes[cm.index_of("pool")];
  EXPECT_EQ(pool.kind(), OpKind::AvgPool);
  EXPECT_EQ(pool.accel, AccelClass::Di);
}

TEST(Compile, WeightMatricesArePaddedAndWithinLimits) {
  for (auto g : {resnet8(1), resnet18s(1), yolo_snippet(1), digits_cnn(1)}) {
    auto cm = compile(g, uniform_cal(g, 2, 1));
    for (const auto &n : cm.nodes) {
      if (!n.weights2d)
        continue;
      EXPECT_EQ(n.weights2d->rows % 16, 0);
      EXPECT_EQ(n.weights2d->cols % 16, 0);
      EXPECT_LE(n.weights2d->cols, 4096);
      EXPECT_LE(n.weights2d->rows, 512);
      EXPECT_EQ(n.weights2d->rows, round_up16(n.out_specs[0].shape[1]));
    }
  }
}

TEST(Compile, ClassificationIsTotal) {
  // Every surviving node gets a class; the only rejections are operators with
  // no accelerator form that no pattern absorbed.
  std::mt19937_64 rng(77);
  int compiled = 0;
  for (int t = 0; t < 30; ++t) {
    auto g = oracle::random_graph(rng, 10);
    try {
      auto cm = compile(g, uniform_cal(g, 2, t));
      ++compiled;
      for (const auto &n : cm.nodes) {
        EXPECT_NE(n.kind(), OpKind::ReLU);
        EXPECT_NE(n.kind(), OpKind::Sigmoid);
        EXPECT_NE(n.kind(), OpKind::Mul);
        EXPECT_NE(n.kind(), OpKind::Flatten);
        EXPECT_NE(n.kind(), OpKind::Reshape);
        EXPECT_EQ(n.accel == AccelClass::An,
                  is_conv_class(n.kind()) || n.kind() == OpKind::MVM)
            << n.id();
      }
    } catch (const UnsupportedOpError &e) {
      const auto f = fuse(optimize(g));
      const GraphNode *n = f.find_node(e.subject());
      ASSERT_NE(n, nullptr) << e.what();
      EXPECT_TRUE(n->kind == OpKind::ReLU || n->kind == OpKind::Sigmoid ||
                  n->kind == OpKind::Mul)
          << e.what();
    }
  }
  EXPECT_GT(compiled, 0);
}

TEST(Compile, StandaloneReluIsRejected) {
  GraphBuilder b("relu", 1);
  auto x = b.input("x", {1, 4, 4, 4});
  b.output(b.unary(OpKind::ReLU, x, "r"));
  auto g = b.build();
  EXPECT_THROW(compile(g, uniform_cal(g, 1, 1)), UnsupportedOpError);
}

TEST(Compile, IdempotentOnQuantizedGraph) {
  auto g = resnet8_raw(8);
  auto cal = uniform_cal(g, 4, 3);
  auto q = quantize(fuse(optimize(g)), cal);
  auto a = compile(g, cal);
  auto b = compile(q, cal);
  EXPECT_EQ(b.nodes, a.nodes);
  EXPECT_EQ(quantize(q, cal), q);
  EXPECT_EQ(fuse(optimize(q)), q);
}

TEST(Compile, QdqPairsAreAbsorbed) {
  GraphBuilder b("qdq", 1);
  auto x = b.input("x", {1, 16});
  b.output(b.mvm(x, 16, false, "fc"));
  auto g = b.build();
  // x -> Q -> DQ -> fc
  g.nodes.insert(g.nodes.begin(),
                 {GraphNode{"q", OpKind::QuantizeLinear, {"x"}, {"xq"}, {{"scale", 0.01}}, {}},
                  GraphNode{"dq", OpKind::DequantizeLinear, {"xq"}, {"xd"}, {{"scale", 0.01}}, {}}});
  g.nodes.back().inputs[0] = "xd";
  validate(g);
  infer_shapes(g);
  auto cm = compile(g, uniform_cal(g, 2, 1));
  ASSERT_EQ(cm.nodes.size(), 1u);
  EXPECT_FLOAT_EQ(cm.input_scales[0].scale, 0.01f);
}

TEST(CompiledIO, SaveLoadRoundTripIsExact) {
  auto dir = std::filesystem::temp_directory_path() /
             ("imce_cio_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto g = yolo_snippet(3);
  auto cm = compile(g, uniform_cal(g, 3, 1));
  save_compiled(cm, dir);
  EXPECT_EQ(load_compiled(dir), cm);
  auto info = read_json(dir / "fpga_info.json");
  EXPECT_EQ(info.at("nodes").size(), cm.nodes.size());
  auto adj = read_json(dir / "adjacency.json");
  EXPECT_EQ(adj.at("edges").size(), cm.adjacency.edges().size());
}

} // namespace
} // namespace imce
