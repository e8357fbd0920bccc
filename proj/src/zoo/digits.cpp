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

#include "imce/zoo/digits.h"

#include <algorithm>
#include <array>
#include <random>

#include "imce/zoo/models.h"

namespace imce {

namespace {

// Classic 5x7 dot-matrix font, one string per row.
constexpr std::array<std::array<const char *, 7>, 10> kFont = {{
    {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."},
    {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."},
    {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"},
    {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."},
    {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."},
    {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."},
    {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."},
    {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."},
    {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."},
    {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."},
}};

} // namespace

int argmax(const std::vector<float> &v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

Dataset make_digits(size_t n, uint64_t seed, const DigitsOptions &opts) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](int lo, int hi) {
    return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1));
  };
  Dataset ds;
  std::vector<int> labels(n);
  for (size_t i = 0; i < n; ++i)
    labels[i] = static_cast<int>(i % 10);
  // Fisher-Yates with the portable generator.
  for (size_t i = n; i > 1; --i)
    std::swap(labels[i - 1], labels[static_cast<size_t>(uniform01(rng) * i)]);

  constexpr int S = static_cast<int>(Dataset::kSide);
  for (int label : labels) {
    std::vector<float> img(S * S, 0.0f);
    const int oy = (S - 7) / 2 + uniform_int(-opts.max_shift, opts.max_shift);
    const int ox = (S - 5) / 2 + uniform_int(-opts.max_shift, opts.max_shift);
    const float intensity =
        opts.min_intensity +
        static_cast<float>(uniform01(rng)) * (1.0f - opts.min_intensity);
    for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 5; ++c) {
        if (kFont[label][r][c] != '#')
          continue;
        if (uniform01(rng) < opts.dropout)
          continue;
        const int y = oy + r, x = ox + c;
        if (y >= 0 && y < S && x >= 0 && x < S)
          img[y * S + x] = intensity;
      }
    for (auto &p : img)
      p = std::clamp(p + static_cast<float>(gaussian(rng)) * opts.noise_sigma, 0.0f,
                     1.0f);
    ds.images.push_back(std::move(img));
    ds.labels.push_back(label);
  }
  return ds;
}

} // namespace imce
