#include "dex/trajectory.hpp"

#include <string>

#include "dex/error.hpp"

namespace dex {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Reach: return "reach";
    case Stage::Grasp: return "grasp";
    case Stage::Post: return "post";
  }
  return "unknown";
}

void Trajectory::validate() const {
  if (frames.size() < 2) throw Error(ErrorCode::InvalidArgument, "trajectory needs at least 2 frames");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "trajectory dt must be positive");
  if (stages.size() != frames.size()) throw Error(ErrorCode::DimensionMismatch, "trajectory stage tags do not match frames");
  const int dof = frames.front().dof();
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].dof() != dof) {
      throw Error(ErrorCode::DimensionMismatch, "trajectory frame " + std::to_string(i) + " has a different dof");
    }
  }
}

}  // namespace dex
