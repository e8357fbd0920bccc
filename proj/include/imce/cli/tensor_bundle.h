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

#include <filesystem>
#include <vector>

#include "imce/ir/tensor.h"

namespace imce {

/// A list of samples, each holding one tensor per graph input (or output),
/// optionally labelled. Stored as `<name>.json` + `<name>.bin`; used for
/// calibration sets, inference inputs and result outputs.
struct TensorSet {
  std::vector<std::vector<TensorValue>> samples;
  std::vector<int> labels;
};

void save_tensor_set(const TensorSet &s, const std::filesystem::path &path);
/// Throws ParseError on malformed files, IOError when missing.
TensorSet load_tensor_set(const std::filesystem::path &path);

} // namespace imce
