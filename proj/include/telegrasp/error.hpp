// Copyright 2026 The Telegrasp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace telegrasp {

/// Base class for every error raised by the library. `kind()` is a short
/// stable token used by the CLI and the service when reporting failures.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& message)
      : Error("dimension_mismatch", message) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error("invalid_argument", message) {}
};

/// A model (usually read from disk) violates its structural invariants.
class CorruptModel : public Error {
 public:
  explicit CorruptModel(const std::string& message)
      : Error("corrupt_model", message) {}
};

class SchemaVersionError : public Error {
 public:
  SchemaVersionError(int expected, int actual)
      : Error("schema_version",
              "unsupported schema_version " + std::to_string(actual) +
                  " (expected " + std::to_string(expected) + ")") {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message)
      : Error("parse_error", message) {}
};

class NotFound : public Error {
 public:
  explicit NotFound(const std::string& message) : Error("not_found", message) {}
};

}  // namespace telegrasp
