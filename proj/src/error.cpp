#include "palmline/error.hpp"

namespace palmline {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingParameter: return "MissingParameter";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::DegenerateImage: return "DegenerateImage";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::RoiTooSmall: return "RoiTooSmall";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicatePath: return "DuplicatePath";
    case ErrorCode::TooFewSubjects: return "TooFewSubjects";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::EmptyReport: return "EmptyReport";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace palmline
