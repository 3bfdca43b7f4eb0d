#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roadwatch {

/// Machine-readable failure classes shared by every module.
enum class ErrorCode {
  MalformedTimestamp,
  InvalidDate,
  MalformedRow,
  OutOfRangeCoordinate,
  NonMonotonicTime,
  EmptyTrack,
  OutsideTrackSpan,
  GapTooLarge,
  AntimeridianCrossing,
  DegenerateBox,
  MalformedDetections,
  ProviderUnreachable,
  NoRoute,
  InvalidContract,
  InvalidGeometry,
  NotFound,
  ConflictingWrite,
  MalformedBBox,
  ZeroLengthSegment,
  SinkUnreachable,
  Unauthorized,
  Forbidden,
  InvalidArgument,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace roadwatch
