// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eegagent {

enum class ErrorCode {
  MalformedHeader,
  TruncatedData,
  UnsupportedVariant,
  OutOfRange,
  UnknownChannel,
  UnknownElectrode,
  WindowTooLong,
  EmptySegment,
  SegmentTooShort,
  NoPairs,
  GranularityMismatch,
  BackendUnavailable,
  UnknownTool,
  EmptyBase,
  AgeUnknown,
  PolicyProtocolError,
  UnknownSession,
  ArgumentValidation,
  NoResults,
  StorageFull,
  CorruptRecord,
  InvalidArgument,
  NotFound,
  SessionBusy,
  Unauthorized,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the HTTP layer) can map it without parsing messages.
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

}  // namespace eegagent
