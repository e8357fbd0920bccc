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

#include "imce/noise/noise.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "imce/errors.h"

namespace imce {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53;
constexpr uint32_t kMul1 = 0xCD9E8D57;
constexpr uint32_t kWeyl0 = 0x9E3779B9;
constexpr uint32_t kWeyl1 = 0xBB67AE85;

// Domain tags keep programming and read streams disjoint.
constexpr uint32_t kProgTag = 0x50524F47; // "PROG"
constexpr uint32_t kReadTag = 0x52454144; // "READ"

Philox4x32::Key key_for(uint64_t seed, uint32_t tag) {
  return {static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32) ^ tag};
}

// 53-bit uniform in (0, 1].
double unit(uint32_t hi, uint32_t lo) {
  uint64_t bits = (static_cast<uint64_t>(hi) << 21) ^ (lo >> 11);
  bits &= (uint64_t{1} << 53) - 1;
  return (static_cast<double>(bits) + 1.0) / 9007199254740992.0;
}

} // namespace

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) {
  for (int round = 0; round < 10; ++round) {
    const uint64_t p0 = static_cast<uint64_t>(kMul0) * c[0];
    const uint64_t p1 = static_cast<uint64_t>(kMul1) * c[2];
    c = {static_cast<uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<uint32_t>(p1),
         static_cast<uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<uint32_t>(p0)};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::array<double, 2> gaussian_pair(Philox4x32::Counter ctr, Philox4x32::Key key) {
  auto w = Philox4x32::generate(ctr, key);
  const double u1 = unit(w[0], w[1]);
  const double u2 = unit(w[2], w[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(th), r * std::sin(th)};
}

std::string_view to_string(NoiseModel::Kind k) {
  switch (k) {
  case NoiseModel::Kind::None:
    return "None";
  case NoiseModel::Kind::GaussianProgramming:
    return "GaussianProgramming";
  case NoiseModel::Kind::GaussianRead:
    return "GaussianRead";
  case NoiseModel::Kind::Combined:
    return "Combined";
  }
  return "None";
}

NoiseModel::Kind noise_kind_from_string(std::string_view s) {
  for (auto k : {NoiseModel::Kind::None, NoiseModel::Kind::GaussianProgramming,
                 NoiseModel::Kind::GaussianRead, NoiseModel::Kind::Combined})
    if (to_string(k) == s)
      return k;
  throw ConfigError("unknown noise kind '" + std::string(s) + "'");
}

nlohmann::json noise_to_json(const NoiseModel &nm) {
  return {{"kind", to_string(nm.kind)},
          {"sigma_prog", nm.sigma_prog},
          {"sigma_read", nm.sigma_read},
          {"seed", nm.seed}};
}

NoiseModel noise_from_json(const nlohmann::json &j) {
  NoiseModel nm;
  try {
    nm.kind = noise_kind_from_string(j.value("kind", std::string("None")));
    nm.sigma_prog = j.value("sigma_prog", 0.0);
    nm.sigma_read = j.value("sigma_read", 0.0);
    nm.seed = j.value("seed", uint64_t{0});
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("noise section: ") + e.what());
  }
  if (!(nm.sigma_prog >= 0.0) || !(nm.sigma_read >= 0.0))
    throw ConfigError("noise sigmas must be non-negative");
  return nm;
}

uint32_t noise_node_key(std::string_view id) {
  uint32_t h = 2166136261u;
  for (unsigned char c : id) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

AnMatrix program_weights(const AnMatrix &m, const NoiseModel &nm,
                         uint32_t node_key) {
  if (!nm.programming_active())
    return m;
  AnMatrix out = m;
  const double sigma = nm.sigma_prog * 127.0;
  const auto key = key_for(nm.seed, kProgTag);
  for (int64_t r = 0; r < m.rows; ++r)
    for (int64_t c = 0; c < m.cols; ++c) {
      const double eps = gaussian_pair({node_key, static_cast<uint32_t>(r),
                                        static_cast<uint32_t>(c), 0},
                                       key)[0] *
                         sigma;
      out.data[r * m.cols + c] = saturate_round(m.at(r, c) + eps);
    }
  return out;
}

void read_noise(std::span<int32_t> acc, const NoiseModel &nm, uint32_t node_key,
                uint64_t invocation, uint64_t mvm_index, int64_t rows) {
  if (!nm.read_active())
    return;
  const double sigma =
      nm.sigma_read * 127.0 * std::sqrt(static_cast<double>(rows));
  auto key = key_for(nm.seed ^ (invocation >> 32), kReadTag);
  key[0] ^= node_key;
  for (size_t j = 0; j < acc.size(); j += 2) {
    auto g = gaussian_pair({static_cast<uint32_t>(invocation),
                            static_cast<uint32_t>(mvm_index),
                            static_cast<uint32_t>(mvm_index >> 32),
                            static_cast<uint32_t>(j)},
                           key);
    for (size_t k = 0; k < 2 && j + k < acc.size(); ++k) {
      const double v = static_cast<double>(acc[j + k]) + std::round(g[k] * sigma);
      acc[j + k] = static_cast<int32_t>(
          std::clamp(v, static_cast<double>(std::numeric_limits<int32_t>::min()),
                     static_cast<double>(std::numeric_limits<int32_t>::max())));
    }
  }
}

} // namespace imce
