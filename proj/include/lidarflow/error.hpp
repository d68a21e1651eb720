#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lidarflow {

/// Error classes surfaced by the library. Each maps to a distinct process
/// exit code in the command-line tool.
enum class ErrorCode {
  kInvalidArgument,
  kInvalidTransform,
  kMissingFile,
  kMalformedRecord,
  kCalibrationParseError,
  kDecodeError,
  kIoError,
  kInvalidSpec,
  kDimensionMismatch,
  kImageTooSmall,
  kEmptyWindow,
  kNonMonotonicTimestamps,
  kEmptyCloud,
  kDegenerateGeometry,
  kMissingStep,
  kMissingNeighbor,
  kWindowTooSmall,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Exit code used by the CLI for an error class. 0 and 1 are reserved for
/// success and unexpected failures, 2 for usage errors.
int exit_code(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lidarflow
