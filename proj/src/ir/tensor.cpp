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

#include "imce/ir/tensor.h"

#include <cstring>
#include <sstream>

#include "imce/errors.h"

namespace imce {

std::string_view to_string(DType t) {
  switch (t) {
  case DType::INT8:
    return "INT8";
  case DType::INT32:
    return "INT32";
  case DType::FP32:
    return "FP32";
  }
  return "?";
}

DType dtype_from_string(std::string_view s) {
  if (s == "INT8")
    return DType::INT8;
  if (s == "INT32")
    return DType::INT32;
  if (s == "FP32")
    return DType::FP32;
  throw ParseError("unknown dtype '" + std::string(s) + "'");
}

size_t dtype_size(DType t) {
  switch (t) {
  case DType::INT8:
    return 1;
  case DType::INT32:
  case DType::FP32:
    return 4;
  }
  return 0;
}

int64_t num_elements(const Shape &shape) {
  if (shape.empty())
    return 0;
  int64_t n = 1;
  for (int64_t d : shape)
    n *= d;
  return n;
}

std::string shape_str(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i)
    os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

TensorValue::Storage make_storage(DType t, size_t n) {
  switch (t) {
  case DType::INT8:
    return std::vector<int8_t>(n);
  case DType::INT32:
    return std::vector<int32_t>(n);
  case DType::FP32:
    break;
  }
  return std::vector<float>(n);
}

size_t storage_len(const TensorValue::Storage &s) {
  return std::visit([](const auto &v) { return v.size(); }, s);
}

DType storage_dtype(const TensorValue::Storage &s) {
  switch (s.index()) {
  case 0:
    return DType::INT8;
  case 1:
    return DType::INT32;
  default:
    return DType::FP32;
  }
}

} // namespace

TensorValue::TensorValue(TensorSpec spec, Storage data)
    : spec_(std::move(spec)), data_(std::move(data)) {
  check();
}

void TensorValue::check() const {
  if (spec_.shape.empty())
    throw ShapeError("tensor '" + spec_.name + "' has an empty shape");
  for (int64_t d : spec_.shape)
    if (d < 1)
      throw ShapeError("tensor '" + spec_.name + "' has non-positive dim " +
                       shape_str(spec_.shape));
  if (storage_dtype(data_) != spec_.dtype)
    throw ShapeError("tensor '" + spec_.name + "' buffer dtype mismatch");
  if (static_cast<int64_t>(storage_len(data_)) != spec_.num_elements())
    throw ShapeError("tensor '" + spec_.name + "' buffer has " +
                     std::to_string(storage_len(data_)) + " elements, shape " +
                     shape_str(spec_.shape) + " needs " +
                     std::to_string(spec_.num_elements()));
}

TensorValue TensorValue::fp32(std::string name, Shape shape,
                              std::vector<float> data) {
  return TensorValue({std::move(name), std::move(shape), DType::FP32},
                     std::move(data));
}

TensorValue TensorValue::int8(std::string name, Shape shape,
                              std::vector<int8_t> data) {
  return TensorValue({std::move(name), std::move(shape), DType::INT8},
                     std::move(data));
}

TensorValue TensorValue::int32(std::string name, Shape shape,
                               std::vector<int32_t> data) {
  return TensorValue({std::move(name), std::move(shape), DType::INT32},
                     std::move(data));
}

TensorValue TensorValue::zeros(TensorSpec spec) {
  auto n = static_cast<size_t>(spec.num_elements());
  auto storage = make_storage(spec.dtype, n);
  return TensorValue(std::move(spec), std::move(storage));
}

std::span<const uint8_t> TensorValue::bytes() const {
  return std::visit(
      [](const auto &v) {
        return std::span<const uint8_t>(
            reinterpret_cast<const uint8_t *>(v.data()),
            v.size() * sizeof(v[0]));
      },
      data_);
}

TensorValue TensorValue::from_bytes(TensorSpec spec,
                                    std::span<const uint8_t> raw) {
  if (raw.size() != spec.byte_size())
    throw ShapeError("tensor '" + spec.name + "' expects " +
                     std::to_string(spec.byte_size()) + " bytes, got " +
                     std::to_string(raw.size()));
  auto storage = make_storage(spec.dtype, static_cast<size_t>(spec.num_elements()));
  std::visit(
      [&](auto &v) {
        if (!raw.empty())
          std::memcpy(v.data(), raw.data(), raw.size());
      },
      storage);
  return TensorValue(std::move(spec), std::move(storage));
}

std::vector<float> TensorValue::to_float() const {
  return std::visit(
      [](const auto &v) { return std::vector<float>(v.begin(), v.end()); },
      data_);
}

} // namespace imce
