#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tilestream {

enum class ErrorCode {
  FileNotFound,
  UnsupportedFormat,
  MissingMpp,
  OutOfBounds,
  DecodeError,
  IoError,
  InvalidArgument,
  MaxAttemptsExceeded,
  DegenerateBatch,
  DuplicateRows,
  EmptyPatchSet,
  NotDivisible,
  EmptyInput,
  ShapeMismatch,
  ZeroVariance,
  InsufficientClassExamples,
  DegenerateInput,
  CropTooLarge,
  ParseError,
  ValidationError,
  ExhaustedDataset,
  BindError,
  Protocol,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` carries the
// category, `what()` a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tilestream
