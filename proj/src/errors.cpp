#include "scribe/errors.hpp"

namespace scribe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::EmptyAudio: return "EmptyAudio";
    case ErrorCode::UnsupportedMedia: return "UnsupportedMedia";
    case ErrorCode::SessionArchived: return "SessionArchived";
    case ErrorCode::EmptyBlob: return "EmptyBlob";
    case ErrorCode::StorageFull: return "StorageFull";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::BackendRejected: return "BackendRejected";
    case ErrorCode::MalformedOutput: return "MalformedOutput";
    case ErrorCode::ContextOverflow: return "ContextOverflow";
    case ErrorCode::EmptyTranscript: return "EmptyTranscript";
    case ErrorCode::TranscriptNotReady: return "TranscriptNotReady";
    case ErrorCode::SectionMismatch: return "SectionMismatch";
    case ErrorCode::UnknownUser: return "UnknownUser";
    case ErrorCode::NoUsers: return "NoUsers";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::AddressInUse: return "AddressInUse";
  }
  return "Unknown";
}

}  // namespace scribe
