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

namespace imce {

/// Synthetic 10-class digits: 5x7 glyphs on a 12x12 canvas with random
/// shifts, stroke intensity, pixel dropout and additive Gaussian noise.
struct DigitsOptions {
  int max_shift = 2;
  float min_intensity = 0.6f;
  float dropout = 0.05f;
  float noise_sigma = 0.1f;
};

struct Dataset {
  static constexpr int64_t kSide = 12;
  /// One 1x1x12x12 image per sample, values in [0, 1].
  std::vector<std::vector<float>> images;
  std::vector<int> labels;

  size_t size() const { return labels.size(); }
};

/// `n` samples with balanced labels (i % 10, shuffled).
Dataset make_digits(size_t n, uint64_t seed, const DigitsOptions &opts = {});

/// Index of the largest value (first one on ties).
int argmax(const std::vector<float> &v);

} // namespace imce
