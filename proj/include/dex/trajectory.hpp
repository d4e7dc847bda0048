#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "dex/hand_model.hpp"

namespace dex {

enum class Stage : std::uint8_t { Reach = 0, Grasp = 1, Post = 2 };

std::string_view to_string(Stage stage);

/// Time-stamped pose sequence with a fixed frame spacing.
struct Trajectory {
  std::vector<HandPose> frames;
  std::vector<Stage> stages;  // one per frame
  double dt = 0.04;

  std::size_t size() const { return frames.size(); }
  /// Throws unless there are >= 2 frames, dt > 0, and all frames share a dof.
  void validate() const;
};

}  // namespace dex
