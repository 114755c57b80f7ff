#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace palmline {

enum class ErrorCode {
  // container
  BadMagic,
  UnsupportedVersion,
  UnsupportedDtype,
  Truncated,
  Malformed,
  DuplicateName,
  // tensors and inference
  InvalidShape,
  ShapeMismatch,
  MissingParameter,
  // imaging
  EmptyImage,
  DegenerateImage,
  EmptyMask,
  RoiTooSmall,
  // classification
  SingleClass,
  NonFiniteInput,
  DimensionMismatch,
  // datasets and sweeps
  ParseError,
  DuplicatePath,
  TooFewSubjects,
  ClassTooSmall,
  EmptyReport,
  // general
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// The single exception type thrown by the library. The code identifies the
/// failure class, the message carries the offending names and dimensions.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace palmline
