// Copyright (c) 2026, The posegap Authors. All rights reserved.
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

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace posegap {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveDepth,
  EmptyMesh,
  NotARotation,
  ParseError,
  UnsupportedFormat,
  DuplicateIndex,
  DecodeError,
  IoError,
  NothingVisible,
  MissingTexture,
  EmptyPool,
  SizeMismatch,
  TooSmall,
  LengthMismatch,
  UnknownSampleId,
  DuplicateId,
  ManifestParseError,
  EmptySource,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::DuplicateIndex: return "DuplicateIndex";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NothingVisible: return "NothingVisible";
    case ErrorCode::MissingTexture: return "MissingTexture";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnknownSampleId: return "UnknownSampleId";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ManifestParseError: return "ManifestParseError";
    case ErrorCode::EmptySource: return "EmptySource";
  }
  return "Unknown";
}

/// Single exception type for the library. `code()` identifies the failure
/// class; `detail()` carries a line number or element index when one applies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::int64_t> detail = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::int64_t> detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::optional<std::int64_t> detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::optional<std::int64_t> detail = std::nullopt) {
  throw Error(code, message, detail);
}

}  // namespace posegap
