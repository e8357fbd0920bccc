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

/// Dense row-major INT8 matrix.
struct Int8Matrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<int8_t> data;

  Int8Matrix() = default;
  Int8Matrix(int64_t r, int64_t c)
      : rows(r), cols(c), data(static_cast<size_t>(r * c), 0) {}

  int8_t &at(int64_t r, int64_t c) { return data[r * cols + c]; }
  int8_t at(int64_t r, int64_t c) const { return data[r * cols + c]; }

  bool operator==(const Int8Matrix &) const = default;
};

constexpr int64_t round_up16(int64_t v) { return (v + 15) / 16 * 16; }

} // namespace imce
