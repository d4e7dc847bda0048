#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dex {

enum class ErrorCode {
  InvalidArgument,
  InvalidMesh,
  EmptyMesh,
  InvalidHandConfig,
  DimensionMismatch,
  DegenerateGeometry,
  NonFiniteEnergy,
  MissingArticulationSpec,
  UnknownObject,
  ChecksumMismatch,
  VersionMismatch,
  FormatError,
  IoError,
  StageFailed,
};

std::string_view to_string(ErrorCode code);

/// Structured failure carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dex
