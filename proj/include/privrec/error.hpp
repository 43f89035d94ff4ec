// Copyright 2026 The privrec Authors
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
#include <string_view>

namespace privrec {

// Error categories. Each maps to a stable CLI exit code (see exit_code()).
enum class ErrorKind {
  kIo,
  kEmptyCatalog,
  kConfig,
  kDegenerateClass,
  kShape,
  kTemplate,
  kParse,
  kTransport,
  kProtocol,
  kEmptyResponse,
  kUndefined,
  kFormat,
  kPrivacy,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return "io";
    case ErrorKind::kEmptyCatalog: return "empty_catalog";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kDegenerateClass: return "degenerate_class";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kTemplate: return "template";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kProtocol: return "protocol";
    case ErrorKind::kEmptyResponse: return "empty";
    case ErrorKind::kUndefined: return "undefined";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kPrivacy: return "privacy";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, bool retry_safe = false)
      : std::runtime_error(what), kind_(kind), retry_safe_(retry_safe) {}

  ErrorKind kind() const noexcept { return kind_; }

  // True when re-issuing the same request cannot cause a duplicate side
  // effect (transport-level failures on idempotent calls).
  bool retry_safe() const noexcept { return retry_safe_; }

  // True for the backend error categories {transport, protocol, empty}.
  bool is_backend_error() const noexcept {
    return kind_ == ErrorKind::kTransport || kind_ == ErrorKind::kProtocol ||
           kind_ == ErrorKind::kEmptyResponse;
  }

 private:
  ErrorKind kind_;
  bool retry_safe_;
};

// Parse failures keep the offending raw text for diagnostics.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(ErrorKind::kParse, what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitBackend = 4;
inline constexpr int kExitIo = 5;
inline constexpr int kExitData = 6;

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kTemplate:
      return kExitConfig;
    case ErrorKind::kTransport:
    case ErrorKind::kProtocol:
    case ErrorKind::kEmptyResponse:
      return kExitBackend;
    case ErrorKind::kIo:
      return kExitIo;
    case ErrorKind::kEmptyCatalog:
    case ErrorKind::kDegenerateClass:
    case ErrorKind::kShape:
    case ErrorKind::kParse:
    case ErrorKind::kUndefined:
    case ErrorKind::kFormat:
      return kExitData;
    case ErrorKind::kPrivacy:
      return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace privrec
