#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace calyx {

enum class ErrorCode {
  kParseError,
  kInvalidArgument,
  kWatertightnessRequired,
  kLabelCountMismatch,
  kNonContiguousLabels,
  kUndersizedCalyx,
  kDegenerateMesh,
  kInitializationTooFar,
  kDegenerateFiducials,
  kDimensionMismatch,
  kNonMonotonicTimestamps,
  kDegenerateFold,
  kGenerationFailed,
  kUnreachableCalyx,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries a machine-readable code so
// the CLI can print structured messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kWatertightnessRequired: return "WatertightnessRequired";
    case ErrorCode::kLabelCountMismatch: return "LabelCountMismatch";
    case ErrorCode::kNonContiguousLabels: return "NonContiguousLabels";
    case ErrorCode::kUndersizedCalyx: return "UndersizedCalyx";
    case ErrorCode::kDegenerateMesh: return "DegenerateMesh";
    case ErrorCode::kInitializationTooFar: return "InitializationTooFar";
    case ErrorCode::kDegenerateFiducials: return "DegenerateFiducials";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::kDegenerateFold: return "DegenerateFold";
    case ErrorCode::kGenerationFailed: return "GenerationFailed";
    case ErrorCode::kUnreachableCalyx: return "UnreachableCalyx";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace calyx
