#include "tilestream/errors.hpp"

namespace tilestream {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::MissingMpp: return "MissingMpp";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MaxAttemptsExceeded: return "MaxAttemptsExceeded";
    case ErrorCode::DegenerateBatch: return "DegenerateBatch";
    case ErrorCode::DuplicateRows: return "DuplicateRows";
    case ErrorCode::EmptyPatchSet: return "EmptyPatchSet";
    case ErrorCode::NotDivisible: return "NotDivisible";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InsufficientClassExamples: return "InsufficientClassExamples";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::CropTooLarge: return "CropTooLarge";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::ExhaustedDataset: return "ExhaustedDataset";
    case ErrorCode::BindError: return "BindError";
    case ErrorCode::Protocol: return "PROTOCOL";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace tilestream
