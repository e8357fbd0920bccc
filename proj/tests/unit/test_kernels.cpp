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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "imce/errors.h"
#include "imce/kernels/an.h"
#include "imce/kernels/cost.h"
#include "imce/kernels/di.h"
#include "oracles.h"

namespace imce {
namespace {

AnMatrix random_matrix(std::mt19937_64 &rng, int64_t rows, int64_t cols, float ws) {
  return AnMatrix(rows, cols, oracle::rand_codes(rng, static_cast<size_t>(rows * cols)),
                  QuantParams{ws, 0});
}

TEST(SaturateRound, HalfAwayFromZero) {
  EXPECT_EQ(saturate_round(2.5f), 3);
  EXPECT_EQ(saturate_round(-2.5f), -3);
  EXPECT_EQ(saturate_round(2.49999), 2);
  EXPECT_EQ(saturate_round(127.5), 127);
  EXPECT_EQ(saturate_round(-300.0f), -127);
}

TEST(AnMatrix, RejectsBadDimensions) {
  EXPECT_THROW(AnMatrix(15, 16, std::vector<int8_t>(240), {}), SizeError);
  EXPECT_THROW(AnMatrix(4112, 16, std::vector<int8_t>(4112 * 16), {}), SizeError);
  EXPECT_THROW(AnMatrix(16, 528, std::vector<int8_t>(16 * 528), {}), SizeError);
  EXPECT_THROW(AnMatrix(16, 16, std::vector<int8_t>(10), {}), ShapeError);
  EXPECT_NO_THROW(AnMatrix(4096, 512, std::vector<int8_t>(4096 * 512), {}));
}

TEST(Mvm, IdentityReturnsInput) {
  std::vector<int8_t> eye(16 * 16, 0);
  for (int i = 0; i < 16; ++i)
    eye[i * 17] = 1;
  AnMatrix m(16, 16, eye, QuantParams{1.0f, 0});
  std::vector<int8_t> x = {1, -2, 3, -4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, -127};
  EXPECT_EQ(mvm(m, x, 1.0f, 1.0f), x);
}

TEST(Mvm, SaturatesAtFullScale) {
  AnMatrix m(512, 16, std::vector<int8_t>(512 * 16, 127), QuantParams{1.0f, 0});
  std::vector<int8_t> x(512, 127);
  std::vector<int32_t> acc(16);
  mvm_accumulate(m, x, acc);
  EXPECT_EQ(acc[0], 512 * 127 * 127);
  auto y = mvm(m, x, 1.0f, 1.0f);
  EXPECT_EQ(y, std::vector<int8_t>(16, 127));
  std::vector<int8_t> nx(512, -127);
  EXPECT_EQ(mvm(m, nx, 1.0f, 1.0f), std::vector<int8_t>(16, -127));
}

TEST(Mvm, RandomMatchesOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const int64_t rows = 16 * oracle::rand_int(rng, 1, 16);
    const int64_t cols = 16 * oracle::rand_int(rng, 1, 8);
    auto m = random_matrix(rng, rows, cols, oracle::rand_scale(rng, 1e-3, 1e-1));
    auto x = oracle::rand_codes(rng, static_cast<size_t>(rows));
    const float si = oracle::rand_scale(rng, 1e-3, 1e-1);
    const float so = static_cast<float>(si * m.weight_scale.scale * 127 *
                                        std::sqrt(static_cast<double>(rows)));
    EXPECT_EQ(mvm(m, x, si, so),
              oracle::mvm(m.data, rows, cols, x, si, m.weight_scale.scale, so));
  }
  auto m = random_matrix(rng, 128, 128, 0.01f);
  auto x = oracle::rand_codes(rng, 128);
  EXPECT_EQ(mvm(m, x, 0.02f, 3.0f), oracle::mvm(m.data, 128, 128, x, 0.02f, 0.01f, 3.0f));
}

TEST(Mvm, WrongInputLengthIsShapeError) {
  AnMatrix m(32, 16, std::vector<int8_t>(32 * 16), {});
  std::vector<int8_t> x(16);
  std::vector<int32_t> acc(16);
  EXPECT_THROW(mvm_accumulate(m, x, acc), ShapeError);
}

TEST(Im2col, ThreeByThreePaddedPatches) {
  // 1x3x3 input, 3x3 kernel, pad 1: the centre patch is the whole image.
  Attrs a{{"kernel_shape", std::vector<int64_t>{3, 3}},
          {"strides", std::vector<int64_t>{1, 1}},
          {"pads", std::vector<int64_t>{1, 1}}};
  auto plan = make_im2col_plan({1, 1, 3, 3}, a);
  EXPECT_EQ(plan.n_patches(), 9);
  EXPECT_EQ(plan.patch_len(), 9);
  std::vector<int8_t> x = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto p = im2col(x, plan, 16);
  ASSERT_EQ(p.rows, 9);
  ASSERT_EQ(p.cols, 16);
  for (int i = 0; i < 9; ++i)
    EXPECT_EQ(p.at(4, i), x[i]);
  // Top-left patch: first row and column are padding.
  std::vector<int8_t> tl = {0, 0, 0, 0, 1, 2, 0, 4, 5};
  for (int i = 0; i < 9; ++i)
    EXPECT_EQ(p.at(0, i), tl[i]);
  for (int i = 9; i < 16; ++i)
    EXPECT_EQ(p.at(0, i), 0);
}

TEST(Im2col, StrideTwoChannelMajor) {
  Attrs a{{"kernel_shape", std::vector<int64_t>{2, 2}},
          {"strides", std::vector<int64_t>{2, 2}},
          {"pads", std::vector<int64_t>{0, 0}}};
  auto plan = make_im2col_plan({1, 2, 4, 4}, a);
  EXPECT_EQ(plan.out_h(), 2);
  std::vector<int8_t> x(32);
  for (int i = 0; i < 32; ++i)
    x[i] = static_cast<int8_t>(i);
  auto p = im2col(x, plan);
  // Patch (1,1), channel 1: rows 2..3, cols 2..3 of the second plane.
  EXPECT_EQ(p.at(3, 4), 16 + 10);
  EXPECT_EQ(p.at(3, 7), 16 + 15);
  EXPECT_EQ(p.at(3, 0), 10);
}

TEST(Conv, RandomMatchesDirectLoop) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 25; ++t) {
    const int64_t C = oracle::rand_int(rng, 1, 8), H = oracle::rand_int(rng, 3, 10),
                  W = oracle::rand_int(rng, 3, 10), O = oracle::rand_int(rng, 1, 20);
    const int64_t k = oracle::rand_int(rng, 0, 1) ? 3 : 1;
    const int64_t s = oracle::rand_int(rng, 1, 2), p = k == 3 ? oracle::rand_int(rng, 0, 1) : 0;
    const OpKind kind = t % 2 ? OpKind::FusedConvReLU : OpKind::Conv2D;
    auto n = oracle::make_conv_node(rng, C, H, W, O, k, k, s, p, kind);
    auto x = oracle::rand_codes(rng, static_cast<size_t>(C * H * W));
    auto kern = AnKernel::from_node(n);
    EXPECT_EQ(kern.run(x), oracle::conv(n, x, kind == OpKind::FusedConvReLU)) << t;
  }
}

TEST(Conv, OneByOneEqualsPerPixelMvm) {
  std::mt19937_64 rng(3);
  auto n = oracle::make_conv_node(rng, 16, 4, 4, 16, 1, 1, 1, 0);
  n.bias.assign(16, 0);
  auto x = oracle::rand_codes(rng, 16 * 16);
  auto y = AnKernel::from_node(n).run(x);
  auto m = AnMatrix::from_weights2d(*n.weights2d, n.weight_scale);
  for (int p = 0; p < 16; ++p) {
    std::vector<int8_t> v(16);
    for (int c = 0; c < 16; ++c)
      v[c] = x[c * 16 + p];
    auto r = mvm(m, v, n.in_scales[0].scale, n.out_scales[0].scale);
    for (int o = 0; o < 16; ++o)
      EXPECT_EQ(y[o * 16 + p], r[o]);
  }
}

TEST(Conv, ReluEpilogueCommutesWithRequantization) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    auto n = oracle::make_conv_node(rng, 4, 6, 6, 8, 3, 3, 1, 1);
    auto x = oracle::rand_codes(rng, 4 * 36);
    auto plain = AnKernel::from_node(n).run(x);
    n.node.kind = OpKind::FusedConvReLU;
    auto fused = AnKernel::from_node(n).run(x);
    for (size_t i = 0; i < plain.size(); ++i)
      EXPECT_EQ(fused[i], std::max<int8_t>(plain[i], 0));
  }
}

TEST(Conv, SiluEpilogueMatchesFormula) {
  std::mt19937_64 rng(5);
  auto n = oracle::make_conv_node(rng, 3, 5, 5, 4, 3, 3, 1, 1, OpKind::FusedConvSiLU);
  auto x = oracle::rand_codes(rng, 75);
  auto k = AnKernel::from_node(n);
  std::vector<int32_t> seen;
  auto y = k.run(x, [&](std::span<int32_t> acc, uint64_t) {
    seen.insert(seen.end(), acc.begin(), acc.begin() + 4);
  });
  ASSERT_EQ(seen.size(), 100u);
  const float acc_scale = n.in_scales[0].scale * n.weight_scale.scale;
  for (int p = 0; p < 25; ++p)
    for (int o = 0; o < 4; ++o) {
      const double v = static_cast<double>(seen[p * 4 + o]) * acc_scale;
      const double want =
          std::clamp(v / (1 + std::exp(-v)) / n.out_scales[0].scale, -127.0, 127.0);
      EXPECT_NEAR(y[o * 25 + p], want, 0.5 + 1e-3) << p << " " << o;
    }
}

TEST(Conv, HookSeesEveryPatchOnce) {
  std::mt19937_64 rng(6);
  auto n = oracle::make_conv_node(rng, 2, 6, 6, 4, 3, 3, 2, 1);
  std::vector<uint64_t> idx;
  AnKernel::from_node(n).run(oracle::rand_codes(rng, 72),
                             [&](std::span<int32_t>, uint64_t i) { idx.push_back(i); });
  ASSERT_EQ(idx.size(), 9u);
  for (size_t i = 0; i < idx.size(); ++i)
    EXPECT_EQ(idx[i], i);
}

TEST(Cost, AnchorsAreReproduced) {
  EXPECT_NEAR(an_mvm_cost_us(128, 128), 0.70, 1e-9);
  EXPECT_NEAR(an_mvm_cost_us(512, 512), 2.70, 1e-9);
  EXPECT_NEAR(an_mvm_cost_us(4096, 512), 21.60, 1e-9);
  EXPECT_NEAR(an_conv_cost_us(10, 128, 128), 7.0, 1e-9);
  EXPECT_NEAR(di_cost_us(DiFunction::Add, 16 * 1024), 55.0, 1e-9);
  EXPECT_NEAR(di_cost_us(DiFunction::SiLU, 16 * 1024), 54.7, 1e-9);
  EXPECT_NEAR(di_cost_us(DiFunction::Concat, 256 * 1024), 244.5, 1e-9);
  EXPECT_NEAR(di_cost_us(DiFunction::Split, 256 * 1024), 244.5, 1e-9);
  EXPECT_NEAR(di_cost_us(DiFunction::MaxPool, 51200), 8900.0, 1e-6);
  EXPECT_NEAR(di_cost_us(DiFunction::AvgPool, 51200), 15900.0, 1e-6);
}

TEST(Cost, MonotoneInSize) {
  double last = 0;
  for (int64_t r = 16; r <= 4096; r += 16) {
    const double c = an_mvm_cost_us(r, 512);
    EXPECT_GE(c, last);
    last = c;
  }
}

QTensor qt(Shape s, std::vector<int8_t> d, float scale) { return QTensor{s, d, scale}; }

TEST(DiAdd, ScalesAndSaturates) {
  auto a = qt({1, 4}, {10, -10, 127, 0}, 0.1f);
  auto b = qt({1, 4}, {20, 5, 127, -3}, 0.05f);
  auto y = add(a, b, 0.1f, false);
  EXPECT_EQ(y.data, (std::vector<int8_t>{20, -8, 127, -2}));
  auto r = add(a, b, 0.1f, true);
  EXPECT_EQ(r.data, (std::vector<int8_t>{20, 0, 127, 0}));
  EXPECT_THROW(add(a, qt({1, 3}, {1, 2, 3}, 1.0f), 1.0f, false), ShapeError);
}

TEST(DiAdd, RandomMatchesOracle) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const float sa = oracle::rand_scale(rng, 1e-3, 1), sb = oracle::rand_scale(rng, 1e-3, 1);
    const float so = oracle::rand_scale(rng, 1e-3, 1);
    auto a = qt({1, 64}, oracle::rand_codes(rng, 64), sa);
    auto b = qt({1, 64}, oracle::rand_codes(rng, 64), sb);
    auto y = add(a, b, so, t % 2);
    for (int i = 0; i < 64; ++i) {
      int8_t want = oracle::round_sat((a.data[i] * static_cast<double>(sa) +
                                       b.data[i] * static_cast<double>(sb)) / so);
      if (t % 2 && want < 0)
        want = 0;
      EXPECT_EQ(y.data[i], want);
    }
  }
}

TEST(DiSilu, EveryCodeMatchesFormula) {
  std::vector<int8_t> all;
  for (int c = -127; c <= 127; ++c)
    all.push_back(static_cast<int8_t>(c));
  auto x = qt({1, static_cast<int64_t>(all.size())}, all, 0.05f);
  auto y = silu(x, 0.04f);
  for (size_t i = 0; i < all.size(); ++i) {
    const double v = all[i] * 0.05;
    EXPECT_EQ(y.data[i], oracle::round_sat(v / (1 + std::exp(-v)) / static_cast<double>(0.04f)));
  }
}

TEST(DiPool, MaxAndAverage) {
  auto x = qt({1, 1, 2, 4}, {1, 5, -3, -4, 2, 3, -1, -2}, 0.1f);
  PoolSpec mp;
  auto m = pool(x, mp, 0.1f);
  EXPECT_EQ(m.shape, (Shape{1, 1, 1, 2}));
  EXPECT_EQ(m.data, (std::vector<int8_t>{5, -1}));
  PoolSpec ap;
  ap.kind = PoolSpec::Kind::Avg;
  auto a = pool(x, ap, 0.1f);
  // (1+5+2+3)/4 = 2.75 -> 3, (-3-4-1-2)/4 = -2.5 -> -3
  EXPECT_EQ(a.data, (std::vector<int8_t>{3, -3}));
  auto a2 = pool(x, ap, 0.2f);
  EXPECT_EQ(a2.data, (std::vector<int8_t>{1, -1}));
}

TEST(DiPool, PaddedAverageCountsZeros) {
  auto x = qt({1, 1, 2, 2}, {4, 4, 4, 4}, 1.0f);
  PoolSpec p;
  p.kind = PoolSpec::Kind::Avg;
  p.ph = p.pw = 1;
  auto y = pool(x, p, 1.0f);
  EXPECT_EQ(y.shape, (Shape{1, 1, 2, 2}));
  EXPECT_EQ(y.data, (std::vector<int8_t>{1, 1, 1, 1}));
}

TEST(DiConcatSplit, RoundTripIsIdentity) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const int64_t C = oracle::rand_int(rng, 2, 12), H = oracle::rand_int(rng, 1, 5);
    auto x = qt({1, C, H, 3}, oracle::rand_codes(rng, static_cast<size_t>(C * H * 3)), 0.3f);
    const int64_t c0 = oracle::rand_int(rng, 1, C - 1);
    for (int64_t axis : {1, 2}) {
      if (axis == 2 && H < 2)
        continue;
      const int64_t d = x.shape[axis];
      const int64_t cut = axis == 1 ? c0 : 1;
      auto parts = split(x, axis, {cut, d - cut});
      ASSERT_EQ(parts.size(), 2u);
      EXPECT_EQ(parts[0].shape[axis], cut);
      EXPECT_EQ(concat(parts, axis, 0.3f), x);
    }
  }
}

TEST(DiConcatSplit, ChannelLayout) {
  auto a = qt({1, 1, 1, 2}, {1, 2}, 1.0f);
  auto b = qt({1, 2, 1, 2}, {3, 4, 5, 6}, 1.0f);
  EXPECT_EQ(concat({a, b}, 1, 1.0f).data, (std::vector<int8_t>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(concat({a, a}, 3, 1.0f).data, (std::vector<int8_t>{1, 2, 1, 2}));
  EXPECT_THROW(concat({a, qt({1, 1, 1, 2}, {1, 2}, 0.5f)}, 1, 1.0f), ScaleMismatchError);
  EXPECT_THROW(split(b, 1, {1, 2}), ShapeError);
}

} // namespace
} // namespace imce
