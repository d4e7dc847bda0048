#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dex/geometry.hpp"
#include "dex/hand_model.hpp"

namespace dex {

/// Articulated-object joint the task must actuate.
struct ArticulationSpec {
  JointType joint_type = JointType::Revolute;
  Vec3 axis = Vec3::UnitZ();
  Vec3 origin = Vec3::Zero();
  /// Half-angle of the prismatic target-force cone (30 degree full apex).
  double cone_half_angle = 0.2617993877991494;

  void validate() const;
};

/// Collision meshes shared read-only by all workers. One of them is the
/// manipulated object; the rest (table slab, fixtures) only repel.
struct Scene {
  std::vector<std::shared_ptr<const IndexedMesh>> meshes;
  int target = 0;
  std::optional<ArticulationSpec> articulation;

  const IndexedMesh& target_mesh() const { return *meshes.at(target); }
  Vec3 target_center() const { return target_mesh().mesh.center(); }

  static Scene single(TriMesh object);
  /// Object plus an axis-aligned slab whose top face sits at `table_height`.
  static Scene with_table(TriMesh object, double table_height, double half_size = 2.0, double thickness = 0.1);
};

}  // namespace dex
