#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "dex/geometry.hpp"

namespace dex {

/// g = (T, R, theta). R is stored as intrinsic x-y-z Euler angles; rotation
/// matrices are derived on demand.
struct HandPose {
  Vec3 translation = Vec3::Zero();
  Vec3 euler = Vec3::Zero();
  Eigen::VectorXd joints;

  HandPose() = default;
  explicit HandPose(int dof) : joints(Eigen::VectorXd::Zero(dof)) {}

  int dof() const { return static_cast<int>(joints.size()); }
  /// Length of the stacked (T, R, theta) vector.
  int size() const { return 6 + dof(); }
  bool is_finite() const { return translation.allFinite() && euler.allFinite() && joints.allFinite(); }
  Mat3 rotation() const;

  Eigen::VectorXd to_vector() const;
  static HandPose from_vector(const Eigen::VectorXd& v);

  bool operator==(const HandPose& other) const;
};

enum class JointType : std::uint8_t { Revolute, Prismatic };

struct HandSphere {
  int link = 0;
  Vec3 center = Vec3::Zero();  // link-local
  double radius = 0.0;
};

struct HandPoint {
  int link = 0;
  Vec3 point = Vec3::Zero();  // link-local
};

struct HandLink {
  std::string name;
  int parent_joint = -1;  // -1 for the root
  std::vector<int> spheres;     // into HandModel::spheres()
  std::vector<int> candidates;  // into HandModel::contact_candidates()
};

struct HandJoint {
  std::string name;
  int parent = 0;
  int child = 0;
  JointType type = JointType::Revolute;
  Vec3 axis = Vec3::UnitZ();
  Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();
  double lower = 0.0;
  double upper = 0.0;
};

struct HandMarkers {
  HandPoint palm_center;
  HandPoint thumb_tip;
  HandPoint middle_tip;
};

/// Kinematic tree with sphere geometry. Immutable after load. The interior
/// joint order is the document order of `joints` and is the canonical theta
/// ordering; the root is driven by 3 prismatic + 3 revolute virtual joints.
class HandModel {
 public:
  static HandModel from_json(const nlohmann::json& config);
  static HandModel load(const std::filesystem::path& path);

  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<HandLink>& links() const { return links_; }
  const std::vector<HandJoint>& joints() const { return joints_; }
  const std::vector<HandSphere>& spheres() const { return spheres_; }
  const std::vector<HandPoint>& contact_candidates() const { return candidates_; }
  const HandMarkers& markers() const { return markers_; }
  int root_link() const { return root_; }
  /// Links in parent-before-child order.
  const std::vector<int>& link_order() const { return order_; }
  /// Interior joints between the root and `link`, root first.
  const std::vector<int>& ancestor_joints(int link) const { return ancestors_[link]; }

  /// Same link or directly connected by a joint.
  bool links_adjacent(int a, int b) const;
  int link_index(const std::string& name) const;

  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;
  HandPose mid_range_pose() const;

  const nlohmann::json& config() const { return config_; }
  /// FNV-1a over the canonical serialization of the config document.
  std::uint64_t config_hash() const { return hash_; }

 private:
  std::vector<HandLink> links_;
  std::vector<HandJoint> joints_;
  std::vector<HandSphere> spheres_;
  std::vector<HandPoint> candidates_;
  HandMarkers markers_;
  int root_ = 0;
  std::vector<int> order_;
  std::vector<std::vector<int>> ancestors_;
  nlohmann::json config_;
  std::uint64_t hash_ = 0;
};

/// World placements produced by forward kinematics.
struct HandPlacement {
  Vec3 root_translation = Vec3::Zero();
  Mat3 euler_axes = Mat3::Identity();  // column k: world axis of Euler angle k
  std::vector<Eigen::Isometry3d> link_frames;
  std::vector<Vec3> joint_origins;  // world position of each joint frame
  std::vector<Vec3> joint_axes;     // world unit axis of each joint
  std::vector<Vec3> sphere_centers;
  std::vector<Vec3> candidates;
  Vec3 palm_center = Vec3::Zero();
  Vec3 thumb_tip = Vec3::Zero();
  Vec3 middle_tip = Vec3::Zero();
};

HandPlacement forward_kinematics(const HandModel& model, const HandPose& pose);

/// Derivatives of world sphere centers and contact candidates with respect to
/// the stacked (T, Euler, theta) vector. Point i occupies rows 3i..3i+2.
struct PoseJacobians {
  Eigen::MatrixXd spheres;
  Eigen::MatrixXd candidates;

  auto sphere(int i) const { return spheres.middleRows<3>(3 * i); }
  auto candidate(int i) const { return candidates.middleRows<3>(3 * i); }
};

PoseJacobians pose_jacobians(const HandModel& model, const HandPose& pose);
/// Same as above, reusing placements already computed for `pose`.
PoseJacobians pose_jacobians(const HandModel& model, const HandPlacement& placement);

/// 3 x (6 + dof) derivative of a world point rigidly attached to `link`.
Eigen::Matrix<double, 3, Eigen::Dynamic> point_jacobian(const HandModel& model, const HandPlacement& placement,
                                                        int link, const Vec3& world_point);

/// normalize(midpoint(thumb_tip, middle_tip) - palm_center) in world frame.
Vec3 heading_direction(const HandModel& model, const HandPose& pose);
Vec3 heading_direction(const HandPlacement& placement);

/// Absolute path of the bundled two-finger fixture hand.
std::filesystem::path toy_hand_path();
HandModel load_toy_hand();

}  // namespace dex
