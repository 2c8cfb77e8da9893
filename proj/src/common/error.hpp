// Copyright (c) 2026, The MVBind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mvbind {

/// Failure categories shared by every module. The C API maps each one onto a
/// stable integer code, and the CLI groups them into exit statuses.
enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kTrailingData,
  kDuplicateId,
  kNonFinite,
  kNoCommonIds,
  kShapeMismatch,
  kZeroNorm,
  kFormat,
  kDivergence,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace mvbind
