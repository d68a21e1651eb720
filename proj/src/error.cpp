#include "lidarflow/error.hpp"

namespace lidarflow {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidTransform: return "InvalidTransform";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kCalibrationParseError: return "CalibrationParseError";
    case ErrorCode::kDecodeError: return "DecodeError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kImageTooSmall: return "ImageTooSmall";
    case ErrorCode::kEmptyWindow: return "EmptyWindow";
    case ErrorCode::kNonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kMissingStep: return "MissingStep";
    case ErrorCode::kMissingNeighbor: return "MissingNeighbor";
    case ErrorCode::kWindowTooSmall: return "WindowTooSmall";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return 2;
    case ErrorCode::kMissingFile: return 3;
    case ErrorCode::kMalformedRecord: return 4;
    case ErrorCode::kCalibrationParseError: return 5;
    case ErrorCode::kDecodeError: return 6;
    case ErrorCode::kIoError: return 7;
    case ErrorCode::kInvalidSpec: return 8;
    case ErrorCode::kDimensionMismatch: return 9;
    case ErrorCode::kImageTooSmall: return 10;
    case ErrorCode::kEmptyWindow: return 11;
    case ErrorCode::kNonMonotonicTimestamps: return 12;
    case ErrorCode::kEmptyCloud: return 13;
    case ErrorCode::kDegenerateGeometry: return 14;
    case ErrorCode::kMissingStep: return 15;
    case ErrorCode::kMissingNeighbor: return 16;
    case ErrorCode::kWindowTooSmall: return 17;
    case ErrorCode::kInvalidTransform: return 18;
  }
  return 1;
}

}  // namespace lidarflow
