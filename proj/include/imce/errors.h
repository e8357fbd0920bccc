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
#include <stdexcept>
#include <string>

namespace imce {

/// Base class of every error raised by the emulator libraries.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Graph validation failure. `subject()` names the offending node or tensor.
class ValidationError : public Error {
 public:
  ValidationError(std::string subject, const std::string &what)
      : Error(what), subject_(std::move(subject)) {}
  const std::string &subject() const { return subject_; }

 private:
  std::string subject_;
};

class CycleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnsupportedOpError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class ScaleMismatchError : public Error {
 public:
  using Error::Error;
};

class DegenerateRangeError : public Error {
 public:
  DegenerateRangeError(std::string tensor, const std::string &what)
      : Error(what), tensor_(std::move(tensor)) {}
  const std::string &tensor() const { return tensor_; }

 private:
  std::string tensor_;
};

class IOError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  CapacityError(std::string accel_class, int shortfall, const std::string &what)
      : Error(what), accel_class_(std::move(accel_class)),
        shortfall_(shortfall) {}
  const std::string &accel_class() const { return accel_class_; }
  int shortfall() const { return shortfall_; }

 private:
  std::string accel_class_;
  int shortfall_;
};

class ConnectivityError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

/// Failure of a worker during a distributed run.
class DistributedError : public Error {
 public:
  DistributedError(int board, uint64_t seq, const std::string &what)
      : Error(what), board_(board), seq_(seq) {}
  int board() const { return board_; }
  uint64_t seq() const { return seq_; }

 private:
  int board_;
  uint64_t seq_;
};

} // namespace imce
