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
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace imce {

using Shape = std::vector<int64_t>;

enum class DType : uint8_t { INT8, INT32, FP32 };

std::string_view to_string(DType t);
DType dtype_from_string(std::string_view s);
size_t dtype_size(DType t);

/// Product of dimensions. An empty shape has zero elements.
int64_t num_elements(const Shape &shape);
std::string shape_str(const Shape &shape);

struct TensorSpec {
  std::string name;
  Shape shape;
  DType dtype = DType::FP32;

  int64_t num_elements() const { return imce::num_elements(shape); }
  size_t byte_size() const {
    return static_cast<size_t>(num_elements()) * dtype_size(dtype);
  }
  bool operator==(const TensorSpec &) const = default;
};

/// Per-tensor symmetric quantization parameters. zero_point is always 0.
struct QuantParams {
  float scale = 1.0f;
  int32_t zero_point = 0;

  bool operator==(const QuantParams &) const = default;
};

/// A materialized tensor: spec plus a flat row-major buffer.
class TensorValue {
 public:
  using Storage =
      std::variant<std::vector<int8_t>, std::vector<int32_t>, std::vector<float>>;

  TensorValue() = default;
  TensorValue(TensorSpec spec, Storage data);

  static TensorValue fp32(std::string name, Shape shape, std::vector<float> data);
  static TensorValue int8(std::string name, Shape shape, std::vector<int8_t> data);
  static TensorValue int32(std::string name, Shape shape,
                           std::vector<int32_t> data);
  static TensorValue zeros(TensorSpec spec);

  const TensorSpec &spec() const { return spec_; }
  TensorSpec &spec() { return spec_; }
  const std::string &name() const { return spec_.name; }
  const Shape &shape() const { return spec_.shape; }
  DType dtype() const { return spec_.dtype; }
  int64_t size() const { return spec_.num_elements(); }

  template <typename T> std::span<const T> data() const {
    return std::get<std::vector<T>>(data_);
  }
  template <typename T> std::span<T> data() {
    return std::get<std::vector<T>>(data_);
  }
  template <typename T> std::vector<T> &vec() {
    return std::get<std::vector<T>>(data_);
  }

  /// Raw little-endian bytes of the buffer.
  std::span<const uint8_t> bytes() const;
  static TensorValue from_bytes(TensorSpec spec, std::span<const uint8_t> raw);

  /// Element values widened to float regardless of dtype.
  std::vector<float> to_float() const;

  bool operator==(const TensorValue &) const = default;

 private:
  void check() const;

  TensorSpec spec_;
  Storage data_;
};

} // namespace imce
