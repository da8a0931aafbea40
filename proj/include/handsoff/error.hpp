#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace handsoff {

enum class ErrorCode {
  MalformedRecord,
  NonMonotonicTimestamp,
  LengthMismatch,
  MissingProfile,
  EmptyPayload,
  InvalidGesture,
  EmptyAfterExclusion,
  UndefinedMetric,
  EmptyInput,
  PayloadTooLarge,
  StorageFailure,
  UnknownMedia,
  NotRecipient,
  MalformedFrame,
  UnknownSession,
  SessionStillOpen,
  BadMessage,
  BadConfig,
  BadGestureName,
  Unauthorized,
  BindFailure,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingProfile: return "MissingProfile";
    case ErrorCode::EmptyPayload: return "EmptyPayload";
    case ErrorCode::InvalidGesture: return "InvalidGesture";
    case ErrorCode::EmptyAfterExclusion: return "EmptyAfterExclusion";
    case ErrorCode::UndefinedMetric: return "UndefinedMetric";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::UnknownMedia: return "UnknownMedia";
    case ErrorCode::NotRecipient: return "NotRecipient";
    case ErrorCode::MalformedFrame: return "MalformedFrame";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::SessionStillOpen: return "SessionStillOpen";
    case ErrorCode::BadMessage: return "BadMessage";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::BadGestureName: return "BadGestureName";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::BindFailure: return "BindFailure";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace handsoff
