#include "dex/hand_model.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "dex/error.hpp"
#include "dex/hash.hpp"
#include "dex/rotation.hpp"

#ifndef DEX_DATA_DIR
#define DEX_DATA_DIR "data"
#endif

namespace dex {

using nlohmann::json;

Mat3 HandPose::rotation() const { return euler_xyz_to_matrix(euler); }

Eigen::VectorXd HandPose::to_vector() const {
  Eigen::VectorXd v(size());
  v << translation, euler, joints;
  return v;
}

HandPose HandPose::from_vector(const Eigen::VectorXd& v) {
  if (v.size() < 6) throw Error(ErrorCode::DimensionMismatch, "pose vector shorter than 6");
  HandPose p(static_cast<int>(v.size()) - 6);
  p.translation = v.head<3>();
  p.euler = v.segment<3>(3);
  p.joints = v.tail(v.size() - 6);
  return p;
}

bool HandPose::operator==(const HandPose& o) const {
  return translation == o.translation && euler == o.euler && joints.size() == o.joints.size() && joints == o.joints;
}

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::InvalidHandConfig, msg); }

Vec3 read_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) config_error(what + " must be a 3-element array");
  Vec3 v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  if (!v.allFinite()) config_error(what + " is not finite");
  return v;
}

}  // namespace

HandModel HandModel::from_json(const json& cfg) {
  HandModel m;
  m.config_ = cfg;
  m.hash_ = fnv1a(cfg.dump());
  try {
    if (!cfg.contains("links") || !cfg["links"].is_array() || cfg["links"].empty()) {
      config_error("hand config needs a non-empty 'links' array");
    }
    std::map<std::string, int> link_ids;
    for (const auto& jl : cfg["links"]) {
      HandLink link;
      link.name = jl.at("name").get<std::string>();
      const int id = static_cast<int>(m.links_.size());
      if (!link_ids.emplace(link.name, id).second) config_error("duplicate link '" + link.name + "'");
      for (const auto& js : jl.value("spheres", json::array())) {
        HandSphere s;
        s.link = id;
        s.center = read_vec3(js.at("center"), "link '" + link.name + "' sphere center");
        s.radius = js.at("radius").get<double>();
        if (!(s.radius > 0.0)) config_error("link '" + link.name + "' has a sphere with non-positive radius");
        link.spheres.push_back(static_cast<int>(m.spheres_.size()));
        m.spheres_.push_back(s);
      }
      for (const auto& jc : jl.value("contact_candidates", json::array())) {
        link.candidates.push_back(static_cast<int>(m.candidates_.size()));
        m.candidates_.push_back({id, read_vec3(jc, "link '" + link.name + "' contact candidate")});
      }
      m.links_.push_back(std::move(link));
    }

    auto find_link = [&](const std::string& name, const std::string& context) {
      auto it = link_ids.find(name);
      if (it == link_ids.end()) config_error(context + " references missing link '" + name + "'");
      return it->second;
    };

    std::map<std::string, int> joint_names;
    for (const auto& jj : cfg.value("joints", json::array())) {
      HandJoint joint;
      joint.name = jj.at("name").get<std::string>();
      if (!joint_names.emplace(joint.name, static_cast<int>(m.joints_.size())).second) {
        config_error("duplicate joint '" + joint.name + "'");
      }
      const std::string ctx = "joint '" + joint.name + "'";
      joint.parent = find_link(jj.at("parent").get<std::string>(), ctx);
      joint.child = find_link(jj.at("child").get<std::string>(), ctx);
      const auto type = jj.at("type").get<std::string>();
      if (type == "revolute") {
        joint.type = JointType::Revolute;
      } else if (type == "prismatic") {
        joint.type = JointType::Prismatic;
      } else {
        config_error(ctx + " has unsupported type '" + type + "'");
      }
      const Vec3 axis = read_vec3(jj.at("axis"), ctx + " axis");
      if (axis.norm() < 1e-12) config_error(ctx + " has a zero axis");
      joint.axis = axis.normalized();
      Vec3 xyz = Vec3::Zero();
      Vec3 rpy = Vec3::Zero();
      if (jj.contains("origin")) {
        const auto& jo = jj["origin"];
        if (jo.contains("xyz")) xyz = read_vec3(jo["xyz"], ctx + " origin xyz");
        if (jo.contains("rpy")) rpy = read_vec3(jo["rpy"], ctx + " origin rpy");
      }
      joint.origin = Eigen::Isometry3d::Identity();
      joint.origin.linear() = rpy_to_matrix(rpy);
      joint.origin.translation() = xyz;
      const auto& lim = jj.at("limits");
      if (!lim.is_array() || lim.size() != 2) config_error(ctx + " limits must be [lo, hi]");
      joint.lower = lim[0].get<double>();
      joint.upper = lim[1].get<double>();
      if (!(joint.lower < joint.upper)) config_error(ctx + " has limits with lo >= hi");
      if (m.links_[joint.child].parent_joint >= 0) {
        config_error(ctx + " gives link '" + m.links_[joint.child].name + "' a second parent");
      }
      if (joint.child == joint.parent) config_error(ctx + " connects a link to itself");
      m.links_[joint.child].parent_joint = static_cast<int>(m.joints_.size());
      m.joints_.push_back(joint);
    }

    int roots = 0;
    for (int i = 0; i < static_cast<int>(m.links_.size()); ++i) {
      if (m.links_[i].parent_joint < 0) {
        m.root_ = i;
        ++roots;
      }
    }
    if (roots != 1) config_error("hand config must have exactly one root link (found " + std::to_string(roots) + ", a cycle?)");

    // breadth-first from the root; anything unreached sits on a cycle
    m.ancestors_.assign(m.links_.size(), {});
    m.order_ = {m.root_};
    for (std::size_t head = 0; head < m.order_.size(); ++head) {
      const int parent = m.order_[head];
      for (int j = 0; j < m.dof(); ++j) {
        if (m.joints_[j].parent != parent) continue;
        const int child = m.joints_[j].child;
        m.ancestors_[child] = m.ancestors_[parent];
        m.ancestors_[child].push_back(j);
        m.order_.push_back(child);
      }
    }
    if (m.order_.size() != m.links_.size()) {
      for (int i = 0; i < static_cast<int>(m.links_.size()); ++i) {
        if (std::find(m.order_.begin(), m.order_.end(), i) == m.order_.end()) {
          config_error("link '" + m.links_[i].name + "' is on a cycle or unreachable from the root");
        }
      }
    }

    if (!cfg.contains("markers")) config_error("hand config needs 'markers'");
    auto read_marker = [&](const char* key) {
      const auto& jm = cfg["markers"];
      if (!jm.contains(key)) config_error(std::string("missing marker '") + key + "'");
      const int link = find_link(jm[key].at("link").get<std::string>(), std::string("marker '") + key + "'");
      return HandPoint{link, read_vec3(jm[key].at("point"), std::string("marker '") + key + "' point")};
    };
    m.markers_.palm_center = read_marker("palm_center");
    m.markers_.thumb_tip = read_marker("thumb_tip");
    m.markers_.middle_tip = read_marker("middle_tip");
  } catch (const json::exception& e) {
    config_error(std::string("malformed hand config: ") + e.what());
  }
  return m;
}

HandModel HandModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open hand config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidHandConfig, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

bool HandModel::links_adjacent(int a, int b) const {
  if (a == b) return true;
  const int pa = links_[a].parent_joint;
  const int pb = links_[b].parent_joint;
  return (pa >= 0 && joints_[pa].parent == b) || (pb >= 0 && joints_[pb].parent == a);
}

int HandModel::link_index(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(links_.size()); ++i) {
    if (links_[i].name == name) return i;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown link '" + name + "'");
}

Eigen::VectorXd HandModel::lower_limits() const {
  Eigen::VectorXd v(dof());
  for (int j = 0; j < dof(); ++j) v[j] = joints_[j].lower;
  return v;
}

Eigen::VectorXd HandModel::upper_limits() const {
  Eigen::VectorXd v(dof());
  for (int j = 0; j < dof(); ++j) v[j] = joints_[j].upper;
  return v;
}

HandPose HandModel::mid_range_pose() const {
  HandPose p(dof());
  p.joints = 0.5 * (lower_limits() + upper_limits());
  return p;
}

HandPlacement forward_kinematics(const HandModel& model, const HandPose& pose) {
  if (pose.dof() != model.dof()) {
    throw Error(ErrorCode::DimensionMismatch, "pose has " + std::to_string(pose.dof()) + " joints, hand has " +
                                                  std::to_string(model.dof()));
  }
  HandPlacement out;
  out.root_translation = pose.translation;
  out.euler_axes = euler_xyz_axes(pose.euler);
  out.link_frames.resize(model.links().size());
  out.joint_origins.resize(model.dof());
  out.joint_axes.resize(model.dof());

  Eigen::Isometry3d root = Eigen::Isometry3d::Identity();
  root.linear() = euler_xyz_to_matrix(pose.euler);
  root.translation() = pose.translation;
  out.link_frames[model.root_link()] = root;

  for (int link : model.link_order()) {
    const int j = model.links()[link].parent_joint;
    if (j < 0) continue;
    const HandJoint& joint = model.joints()[j];
    const Eigen::Isometry3d joint_frame = out.link_frames[joint.parent] * joint.origin;
    out.joint_origins[j] = joint_frame.translation();
    out.joint_axes[j] = joint_frame.linear() * joint.axis;
    Eigen::Isometry3d motion = Eigen::Isometry3d::Identity();
    if (joint.type == JointType::Revolute) {
      motion.linear() = Eigen::AngleAxisd(pose.joints[j], joint.axis).toRotationMatrix();
    } else {
      motion.translation() = pose.joints[j] * joint.axis;
    }
    out.link_frames[link] = joint_frame * motion;
  }

  out.sphere_centers.reserve(model.spheres().size());
  for (const auto& s : model.spheres()) out.sphere_centers.push_back(out.link_frames[s.link] * s.center);
  out.candidates.reserve(model.contact_candidates().size());
  for (const auto& c : model.contact_candidates()) out.candidates.push_back(out.link_frames[c.link] * c.point);
  const auto& mk = model.markers();
  out.palm_center = out.link_frames[mk.palm_center.link] * mk.palm_center.point;
  out.thumb_tip = out.link_frames[mk.thumb_tip.link] * mk.thumb_tip.point;
  out.middle_tip = out.link_frames[mk.middle_tip.link] * mk.middle_tip.point;
  return out;
}

namespace {

template <typename Block>
void fill_point_jacobian(const HandModel& model, const HandPlacement& pl, int link, const Vec3& p, Block&& jac) {
  jac.setZero();
  jac.template leftCols<3>().setIdentity();
  const Vec3 arm = p - pl.root_translation;
  for (int k = 0; k < 3; ++k) jac.col(3 + k) = pl.euler_axes.col(k).cross(arm);
  for (int j : model.ancestor_joints(link)) {
    if (model.joints()[j].type == JointType::Revolute) {
      jac.col(6 + j) = pl.joint_axes[j].cross(p - pl.joint_origins[j]);
    } else {
      jac.col(6 + j) = pl.joint_axes[j];
    }
  }
}

}  // namespace

Eigen::Matrix<double, 3, Eigen::Dynamic> point_jacobian(const HandModel& model, const HandPlacement& placement,
                                                        int link, const Vec3& world_point) {
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, 6 + model.dof());
  fill_point_jacobian(model, placement, link, world_point, jac);
  return jac;
}

PoseJacobians pose_jacobians(const HandModel& model, const HandPlacement& pl) {
  const int n = 6 + model.dof();
  PoseJacobians out;
  out.spheres.resize(3 * model.spheres().size(), n);
  out.candidates.resize(3 * model.contact_candidates().size(), n);
  for (std::size_t i = 0; i < model.spheres().size(); ++i) {
    fill_point_jacobian(model, pl, model.spheres()[i].link, pl.sphere_centers[i], out.spheres.middleRows<3>(3 * i));
  }
  for (std::size_t i = 0; i < model.contact_candidates().size(); ++i) {
    fill_point_jacobian(model, pl, model.contact_candidates()[i].link, pl.candidates[i],
                        out.candidates.middleRows<3>(3 * i));
  }
  return out;
}

PoseJacobians pose_jacobians(const HandModel& model, const HandPose& pose) {
  return pose_jacobians(model, forward_kinematics(model, pose));
}

Vec3 heading_direction(const HandPlacement& pl) {
  const Vec3 v = 0.5 * (pl.thumb_tip + pl.middle_tip) - pl.palm_center;
  const double len = v.norm();
  if (!(len > 1e-12)) throw Error(ErrorCode::DegenerateGeometry, "heading direction is undefined: markers coincide");
  return v / len;
}

Vec3 heading_direction(const HandModel& model, const HandPose& pose) {
  return heading_direction(forward_kinematics(model, pose));
}

std::filesystem::path toy_hand_path() { return std::filesystem::path(DEX_DATA_DIR) / "hands" / "toy_hand.json"; }

HandModel load_toy_hand() { return HandModel::load(toy_hand_path()); }

}  // namespace dex
