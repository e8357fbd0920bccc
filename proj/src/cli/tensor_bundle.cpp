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

#include "imce/cli/tensor_bundle.h"

#include "imce/errors.h"
#include "imce/ir/model_io.h"

namespace imce {

using nlohmann::json;

void save_tensor_set(const TensorSet &s, const std::filesystem::path &path) {
  std::vector<uint8_t> blob;
  json j;
  j["format"] = "imce-tensors";
  j["version"] = 1;
  j["blob"] = path.stem().string() + ".bin";
  j["samples"] = json::array();
  for (const auto &sample : s.samples) {
    json tensors = json::array();
    for (const auto &t : sample)
      tensors.push_back(append_blob(blob, t));
    j["samples"].push_back(std::move(tensors));
  }
  if (!s.labels.empty())
    j["labels"] = s.labels;
  write_text(path, j.dump(2) + "\n");
  auto bin = path;
  bin.replace_extension(".bin");
  write_file(bin, blob);
}

TensorSet load_tensor_set(const std::filesystem::path &path) {
  json j = read_json(path);
  TensorSet s;
  try {
    if (j.value("format", "") != "imce-tensors")
      throw ParseError("'" + path.string() + "' is not a tensor set");
    auto blob = read_file(path.parent_path() / j.at("blob").get<std::string>());
    for (const auto &sample : j.at("samples")) {
      std::vector<TensorValue> tensors;
      for (const auto &e : sample)
        tensors.push_back(read_blob(e, blob));
      s.samples.push_back(std::move(tensors));
    }
    if (j.contains("labels"))
      s.labels = j.at("labels").get<std::vector<int>>();
  } catch (const json::exception &e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
  if (!s.labels.empty() && s.labels.size() != s.samples.size())
    throw ParseError("'" + path.string() + "': label count differs from sample count");
  return s;
}

} // namespace imce
