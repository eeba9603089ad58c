#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scribe {

/// Every failure a module can report. The API layer maps each code to exactly
/// one HTTP status (see api_server.hpp).
enum class ErrorCode {
  IllegalTransition,
  DanglingReference,
  NotFound,
  InvariantViolation,
  ValidationFailed,
  EmptyAudio,
  UnsupportedMedia,
  SessionArchived,
  EmptyBlob,
  StorageFull,
  BackendUnavailable,
  BackendRejected,
  MalformedOutput,
  ContextOverflow,
  EmptyTranscript,
  TranscriptNotReady,
  SectionMismatch,
  UnknownUser,
  NoUsers,
  Unauthorized,
  Forbidden,
  PayloadTooLarge,
  ConfigInvalid,
  AddressInUse,
};

inline constexpr ErrorCode kAllErrorCodes[] = {
    ErrorCode::IllegalTransition,  ErrorCode::DanglingReference,  ErrorCode::NotFound,
    ErrorCode::InvariantViolation, ErrorCode::ValidationFailed,   ErrorCode::EmptyAudio,
    ErrorCode::UnsupportedMedia,   ErrorCode::SessionArchived,    ErrorCode::EmptyBlob,
    ErrorCode::StorageFull,        ErrorCode::BackendUnavailable, ErrorCode::BackendRejected,
    ErrorCode::MalformedOutput,    ErrorCode::ContextOverflow,    ErrorCode::EmptyTranscript,
    ErrorCode::TranscriptNotReady, ErrorCode::SectionMismatch,    ErrorCode::UnknownUser,
    ErrorCode::NoUsers,            ErrorCode::Unauthorized,       ErrorCode::Forbidden,
    ErrorCode::PayloadTooLarge,    ErrorCode::ConfigInvalid,      ErrorCode::AddressInUse,
};

std::string_view to_string(ErrorCode code);

/// A field-level problem attached to a ValidationFailed error.
struct Violation {
  std::string code;
  std::string field;
  std::string message;

  bool operator==(const Violation&) const = default;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Error(ErrorCode code, const std::string& message, std::vector<Violation> violations)
      : std::runtime_error(message), code_(code), violations_(std::move(violations)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  ErrorCode code_;
  std::vector<Violation> violations_;
};

}  // namespace scribe
