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

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "imce/kernels/an.h"
#include "json.hpp"

namespace imce {

/// Philox4x32-10 counter-based generator (Salmon et al. style). Stateless:
/// the same (key, counter) always yields the same four words.
struct Philox4x32 {
  using Counter = std::array<uint32_t, 4>;
  using Key = std::array<uint32_t, 2>;

  static Counter generate(Counter ctr, Key key);
};

/// Two independent N(0,1) draws for one (key, counter) via Box-Muller.
std::array<double, 2> gaussian_pair(Philox4x32::Counter ctr, Philox4x32::Key key);

/// Weight-code-space NVM noise. Sigmas are fractions of full scale (127).
struct NoiseModel {
  enum class Kind : uint8_t { None, GaussianProgramming, GaussianRead, Combined };

  Kind kind = Kind::None;
  double sigma_prog = 0.0;
  double sigma_read = 0.0;
  uint64_t seed = 0;

  bool programming_active() const {
    return (kind == Kind::GaussianProgramming || kind == Kind::Combined) &&
           sigma_prog > 0.0;
  }
  bool read_active() const {
    return (kind == Kind::GaussianRead || kind == Kind::Combined) &&
           sigma_read > 0.0;
  }
  bool operator==(const NoiseModel &) const = default;
};

std::string_view to_string(NoiseModel::Kind k);
NoiseModel::Kind noise_kind_from_string(std::string_view s);

nlohmann::json noise_to_json(const NoiseModel &nm);
/// Throws ConfigError on unknown kinds or negative sigmas.
NoiseModel noise_from_json(const nlohmann::json &j);

/// Stable 32-bit key of a node id, independent of where the node is placed.
uint32_t noise_node_key(std::string_view node_id);

/// w -> saturate(round(w + eps)), eps ~ N(0, (sigma_prog*127)^2), one draw
/// per (seed, node, row, col).
AnMatrix program_weights(const AnMatrix &m, const NoiseModel &nm,
                         uint32_t node_key);

/// Adds N(0, (sigma_read*127)^2 * rows) to every accumulator. Draws are keyed
/// by (seed, node, invocation, mvm_index, col).
void read_noise(std::span<int32_t> acc, const NoiseModel &nm, uint32_t node_key,
                uint64_t invocation, uint64_t mvm_index, int64_t rows);

} // namespace imce
