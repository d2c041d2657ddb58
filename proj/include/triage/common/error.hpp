#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace triage {

enum class ErrorCode {
  ValidationFailed,
  EmptyQuery,
  KindMismatch,
  UnknownSymptomId,
  OutOfRange,
  InvalidParams,
  SessionFinalized,
  DuplicateAnswer,
  TooLarge,
  DimensionMismatch,
  TooFewPoints,
  InvalidSpec,
  TooShort,
  IoFailure,
  CorruptRecord,
  DuplicateEmail,
  WeakPassword,
  InvalidEmail,
  InvalidCredentials,
  Expired,
  UnknownUser,
  NotFound,
  ParseError,
};

// Stable machine token, used verbatim in API error bodies.
constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ValidationFailed: return "validation_failed";
    case ErrorCode::EmptyQuery: return "empty_query";
    case ErrorCode::KindMismatch: return "kind_mismatch";
    case ErrorCode::UnknownSymptomId: return "unknown_symptom_id";
    case ErrorCode::OutOfRange: return "out_of_range";
    case ErrorCode::InvalidParams: return "invalid_params";
    case ErrorCode::SessionFinalized: return "session_finalized";
    case ErrorCode::DuplicateAnswer: return "duplicate_answer";
    case ErrorCode::TooLarge: return "too_large";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::TooFewPoints: return "too_few_points";
    case ErrorCode::InvalidSpec: return "invalid_spec";
    case ErrorCode::TooShort: return "too_short";
    case ErrorCode::IoFailure: return "io_failure";
    case ErrorCode::CorruptRecord: return "corrupt_record";
    case ErrorCode::DuplicateEmail: return "duplicate_email";
    case ErrorCode::WeakPassword: return "weak_password";
    case ErrorCode::InvalidEmail: return "invalid_email";
    case ErrorCode::InvalidCredentials: return "invalid_credentials";
    case ErrorCode::Expired: return "expired";
    case ErrorCode::UnknownUser: return "unknown_user";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::ParseError: return "parse_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace triage
