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
#include <random>

#include <gtest/gtest.h>

#include "imce/errors.h"
#include "imce/compiler/passes.h"
#include "imce/noise/noise.h"
#include "imce/runtime/executor.h"
#include "imce/zoo/models.h"
#include "oracles.h"

namespace imce {
namespace {

NoiseModel prog(double s, uint64_t seed = 1) {
  return NoiseModel{NoiseModel::Kind::GaussianProgramming, s, 0.0, seed};
}
NoiseModel read(double s, uint64_t seed = 1) {
  return NoiseModel{NoiseModel::Kind::GaussianRead, 0.0, s, seed};
}

TEST(Philox, KnownAnswer) {
  // Published Philox4x32-10 test vectors.
  auto z = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(z, (Philox4x32::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  auto f = Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                                {0xffffffff, 0xffffffff});
  EXPECT_EQ(f, (Philox4x32::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, GaussianMoments) {
  double s = 0, s2 = 0;
  const int n = 50000;
  for (uint32_t i = 0; i < n; ++i) {
    auto g = gaussian_pair({i, 7, 0, 0}, {3, 4});
    s += g[0] + g[1];
    s2 += g[0] * g[0] + g[1] * g[1];
  }
  const double mean = s / (2 * n), var = s2 / (2 * n) - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(Noise, DisabledModelsAreIdentity) {
  std::mt19937_64 rng(1);
  AnMatrix m(64, 32, oracle::rand_codes(rng, 64 * 32), QuantParams{0.1f, 0});
  EXPECT_EQ(program_weights(m, NoiseModel{}, 5), m);
  EXPECT_EQ(program_weights(m, prog(0.0), 5), m);
  EXPECT_EQ(program_weights(m, read(0.3), 5), m);
  std::vector<int32_t> acc = {1, -2, 3, 1000};
  auto before = acc;
  read_noise(acc, NoiseModel{}, 5, 1, 0, 64);
  read_noise(acc, prog(0.3), 5, 1, 0, 64);
  read_noise(acc, read(0.0), 5, 1, 0, 64);
  EXPECT_EQ(acc, before);
}

TEST(Noise, ProgrammingSpreadMatchesSigma) {
  // sigma_prog 0.05 of full scale = 6.35 codes. Zero weights avoid clipping.
  AnMatrix m(512, 208, std::vector<int8_t>(512 * 208, 0), QuantParams{1.0f, 0});
  auto p = program_weights(m, prog(0.05, 11), 42);
  double s = 0, s2 = 0;
  for (int8_t w : p.data) {
    s += w;
    s2 += static_cast<double>(w) * w;
  }
  const double n = static_cast<double>(p.data.size());
  ASSERT_GE(n, 1e5);
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  EXPECT_NEAR(sd, 6.35, 6.35 * 0.02);
  EXPECT_NEAR(s / n, 0.0, 0.05);
}

TEST(Noise, ProgrammingIsDeterministicPerSeedAndNode) {
  std::mt19937_64 rng(2);
  AnMatrix m(32, 32, oracle::rand_codes(rng, 1024), QuantParams{1.0f, 0});
  const auto a = program_weights(m, prog(0.1, 3), noise_node_key("conv1"));
  EXPECT_EQ(program_weights(m, prog(0.1, 3), noise_node_key("conv1")), a);
  EXPECT_NE(program_weights(m, prog(0.1, 4), noise_node_key("conv1")), a);
  EXPECT_NE(program_weights(m, prog(0.1, 3), noise_node_key("conv2")), a);
  for (int8_t w : a.data) {
    EXPECT_LE(w, 127);
    EXPECT_GE(w, -127);
  }
}

TEST(Noise, ReadNoiseVariesAcrossInvocationsAndIsReproducible) {
  const NoiseModel nm = read(0.02, 9);
  auto draw = [&](uint64_t inv, uint64_t idx) {
    std::vector<int32_t> acc(64, 0);
    read_noise(acc, nm, 17, inv, idx, 256);
    return acc;
  };
  EXPECT_EQ(draw(1, 0), draw(1, 0));
  EXPECT_NE(draw(1, 0), draw(2, 0));
  EXPECT_NE(draw(1, 0), draw(1, 1));
}

TEST(Noise, ReadNoiseSpreadScalesWithRows) {
  const NoiseModel nm = read(0.01, 1);
  double s2 = 0;
  int n = 0;
  for (uint64_t inv = 0; inv < 400; ++inv) {
    std::vector<int32_t> acc(256, 0);
    read_noise(acc, nm, 3, inv, 0, 400);
    for (int32_t a : acc) {
      s2 += static_cast<double>(a) * a;
      ++n;
    }
  }
  // sigma * 127 * sqrt(rows) = 25.4 accumulator units.
  EXPECT_NEAR(std::sqrt(s2 / n), 25.4, 25.4 * 0.02);
}

TEST(Noise, JsonRoundTripAndValidation) {
  NoiseModel nm{NoiseModel::Kind::Combined, 0.02, 0.01, 99};
  EXPECT_EQ(noise_from_json(noise_to_json(nm)), nm);
  EXPECT_THROW(noise_from_json({{"kind", "pink"}}), ConfigError);
  EXPECT_THROW(noise_from_json({{"kind", "GaussianProgramming"}, {"sigma_prog", -1.0}}),
               ConfigError);
}

TEST(Noise, ExecutorWithZeroSigmaMatchesNoiseless) {
  auto g = resnet8(3);
  std::mt19937_64 rng(5);
  CalibrationSet cal;
  std::vector<float> v(3 * 32 * 32);
  for (auto &x : v)
    x = static_cast<float>(2 * uniform01(rng) - 1);
  cal.samples.push_back({TensorValue::fp32("image", {1, 3, 32, 32}, v)});
  auto cm = compile(g, cal);
  auto in = quantize_input(v, cm.input_scales[0].scale);
  SequentialExecutor clean(cm);
  SequentialExecutor zero(cm, NoiseModel{NoiseModel::Kind::Combined, 0.0, 0.0, 7});
  SequentialExecutor noisy(cm, prog(0.05, 7));
  const auto ref = clean.run({in}, 1);
  EXPECT_EQ(zero.run({in}, 1), ref);
  EXPECT_NE(noisy.run({in}, 1), ref);
  EXPECT_EQ(noisy.run({in}, 1), noisy.run({in}, 2)); // programming noise only
  SequentialExecutor rd(cm, read(0.02, 7));
  EXPECT_NE(rd.run({in}, 1), rd.run({in}, 2));
  EXPECT_EQ(rd.run({in}, 3), rd.run({in}, 3));
}

} // namespace
} // namespace imce
