#include "mimo/error.hpp"

namespace mimo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SeqMismatch: return "SeqMismatch";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::BackendRejected: return "BackendRejected";
    case ErrorCode::ScriptExhausted: return "ScriptExhausted";
    case ErrorCode::AttachmentMissing: return "AttachmentMissing";
    case ErrorCode::MissingBinding: return "MissingBinding";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::ExtraBinding: return "ExtraBinding";
    case ErrorCode::RoutingParseFailure: return "RoutingParseFailure";
    case ErrorCode::NoDraftProduced: return "NoDraftProduced";
    case ErrorCode::RevisionCapReached: return "RevisionCapReached";
    case ErrorCode::StyleParseFailure: return "StyleParseFailure";
    case ErrorCode::VerdictParseFailure: return "VerdictParseFailure";
    case ErrorCode::NoPayloadFound: return "NoPayloadFound";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::CorruptTranscript: return "CorruptTranscript";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace mimo
