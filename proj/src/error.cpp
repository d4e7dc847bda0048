#include "dex/error.hpp"

namespace dex {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::InvalidMesh: return "invalid_mesh";
    case ErrorCode::EmptyMesh: return "empty_mesh";
    case ErrorCode::InvalidHandConfig: return "invalid_hand_config";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::DegenerateGeometry: return "degenerate_geometry";
    case ErrorCode::NonFiniteEnergy: return "non_finite_energy";
    case ErrorCode::MissingArticulationSpec: return "missing_articulation_spec";
    case ErrorCode::UnknownObject: return "unknown_object";
    case ErrorCode::ChecksumMismatch: return "checksum_mismatch";
    case ErrorCode::VersionMismatch: return "version_mismatch";
    case ErrorCode::FormatError: return "format_error";
    case ErrorCode::IoError: return "io_error";
    case ErrorCode::StageFailed: return "stage_failed";
  }
  return "unknown";
}

}  // namespace dex
