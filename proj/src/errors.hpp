// Copyright 2026 The scoredvi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace sdvi {

// Error categories map one-to-one onto the status codes of the C API.
enum class ErrorKind { kArgument, kDomain, kIo, kFormat, kNumeric, kOracle, kConfig };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& w) : Error(ErrorKind::kArgument, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::kDomain, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::kIo, w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorKind::kFormat, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::kNumeric, w) {}
};
struct OracleError : Error {
  explicit OracleError(const std::string& w) : Error(ErrorKind::kOracle, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::kConfig, w) {}
};

// Throws the concrete error type for `kind` with a new message.
[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& what) {
  switch (kind) {
    case ErrorKind::kArgument: throw ArgumentError(what);
    case ErrorKind::kDomain: throw DomainError(what);
    case ErrorKind::kIo: throw IoError(what);
    case ErrorKind::kFormat: throw FormatError(what);
    case ErrorKind::kNumeric: throw NumericError(what);
    case ErrorKind::kOracle: throw OracleError(what);
    case ErrorKind::kConfig: throw ConfigError(what);
  }
  throw Error(kind, what);
}

}  // namespace sdvi
