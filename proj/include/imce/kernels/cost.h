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
#include <string_view>

namespace imce {

// Latency model for simulated-time reporting only. Anchored at measured
// accelerator timings; never consulted for numerical results.

/// One MVM on an An-Accelerator matrix of rows x cols (padded dims).
/// Piecewise linear in rows*cols through (128x128, 0.70 us),
/// (512x512, 2.70 us), (4096x512, 21.60 us).
double an_mvm_cost_us(int64_t rows, int64_t cols);

/// Convolution as `patches` MVMs on a rows x cols matrix.
double an_conv_cost_us(int64_t patches, int64_t rows, int64_t cols);

enum class DiFunction : uint8_t { Add, SiLU, Concat, Split, MaxPool, AvgPool };

std::string_view to_string(DiFunction f);

/// Linear in bytes through the measured point of each function:
/// Add 16 KB -> 55.0 us, SiLU 16 KB -> 54.7 us, Concat/Split 256 KB ->
/// 244.5 us, MaxPool 51200 B -> 8.9 ms, AvgPool 51200 B -> 15.9 ms.
double di_cost_us(DiFunction fn, int64_t bytes);

} // namespace imce
