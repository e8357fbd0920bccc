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

#include "imce/kernels/cost.h"

#include <algorithm>
#include <array>

namespace imce {

namespace {

struct Anchor {
  double cells;
  double us;
};

constexpr std::array<Anchor, 3> kMvmAnchors = {{
    {128.0 * 128.0, 0.70},
    {512.0 * 512.0, 2.70},
    {4096.0 * 512.0, 21.60},
}};

} // namespace

double an_mvm_cost_us(int64_t rows, int64_t cols) {
  const double cells = static_cast<double>(rows) * static_cast<double>(cols);
  // Segment selection; the outer segments extrapolate.
  size_t seg = cells <= kMvmAnchors[1].cells ? 0 : 1;
  const Anchor &a = kMvmAnchors[seg];
  const Anchor &b = kMvmAnchors[seg + 1];
  double t = a.us + (cells - a.cells) * (b.us - a.us) / (b.cells - a.cells);
  return std::max(t, 0.0);
}

double an_conv_cost_us(int64_t patches, int64_t rows, int64_t cols) {
  return static_cast<double>(patches) * an_mvm_cost_us(rows, cols);
}

std::string_view to_string(DiFunction f) {
  switch (f) {
  case DiFunction::Add:
    return "Add";
  case DiFunction::SiLU:
    return "SiLU";
  case DiFunction::Concat:
    return "Concat";
  case DiFunction::Split:
    return "Split";
  case DiFunction::MaxPool:
    return "MaxPool";
  case DiFunction::AvgPool:
    return "AvgPool";
  }
  return "?";
}

double di_cost_us(DiFunction fn, int64_t bytes) {
  double anchor_bytes = 0.0, anchor_us = 0.0;
  switch (fn) {
  case DiFunction::Add:
    anchor_bytes = 16.0 * 1024;
    anchor_us = 55.0;
    break;
  case DiFunction::SiLU:
    anchor_bytes = 16.0 * 1024;
    anchor_us = 54.7;
    break;
  case DiFunction::Concat:
  case DiFunction::Split:
    anchor_bytes = 256.0 * 1024;
    anchor_us = 244.5;
    break;
  case DiFunction::MaxPool:
    anchor_bytes = 128.0 * 20 * 20;
    anchor_us = 8900.0;
    break;
  case DiFunction::AvgPool:
    anchor_bytes = 128.0 * 20 * 20;
    anchor_us = 15900.0;
    break;
  }
  return anchor_us * static_cast<double>(bytes) / anchor_bytes;
}

} // namespace imce
