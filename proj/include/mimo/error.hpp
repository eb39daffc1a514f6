#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mimo {

enum class ErrorCode {
  InvalidArgument,
  SeqMismatch,
  BackendUnavailable,
  BackendRejected,
  ScriptExhausted,
  AttachmentMissing,
  MissingBinding,
  UnknownTemplate,
  ExtraBinding,
  RoutingParseFailure,
  NoDraftProduced,
  RevisionCapReached,
  StyleParseFailure,
  VerdictParseFailure,
  NoPayloadFound,
  SchemaError,
  RangeError,
  LengthMismatch,
  DegenerateInput,
  IoError,
  NotFound,
  CorruptTranscript,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the engine; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::InvalidArgument, message);
}

}  // namespace mimo
