#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dex/geometry.hpp"
#include "dex/hand_model.hpp"
#include "dex/scene.hpp"
#include "dex/trajectory.hpp"
#include "dex/wrench.hpp"

namespace dex {

/// Defaults follow the reference weight table: w_sdf = w_dis = 100,
/// w_self = 10, w_joint = 1, self margin 0.02 m, 4 contacts.
struct EnergyWeights {
  double w_sdf = 100.0;
  double w_dis = 100.0;
  double w_joint = 1.0;
  double w_self = 10.0;
  double w_smooth = 1.0;
  double self_margin = 0.02;
  double friction = 0.5;
  int n_contacts = 4;
  int tws_targets = 32;
  int cone_edges = 8;
  int nnls_iterations = 400;

  void validate() const;
};

/// A scalar energy and its gradient with respect to each input point.
struct PointEnergy {
  double value = 0.0;
  std::vector<Vec3> gradient;
};

/// ||G c||_2 with normals held constant; gradient is with respect to the
/// contact points only.
PointEnergy force_closure(const ContactSet& contacts);

/// Target wrenches for an articulation: revolute -> unit torque about the
/// axis with a force drawn uniformly from the unit ball; prismatic -> unit
/// force uniformly inside the axis cone with zero torque. Torques are about
/// spec.origin.
WrenchMatrix sample_task_wrenches(const ArticulationSpec& spec, int count, std::uint64_t seed);

/// Mean residual norm of fitting each sampled target wrench with a capped
/// nonnegative combination of the contacts' friction-cone edge wrenches.
/// Gradient is with respect to contact points, normals held constant.
PointEnergy task_wrench(const ContactSet& contacts, const ArticulationSpec& spec, const EnergyWeights& weights,
                        std::uint64_t seed);

/// Sum of unsigned distances from each point to the mesh.
PointEnergy contact_distance(std::span<const Vec3> points, const IndexedMesh& mesh);

/// Sum over spheres and meshes of max(r - sdf(center), 0); gradient with
/// respect to the centers.
PointEnergy penetration_energy(std::span<const Vec3> centers, std::span<const double> radii,
                               std::span<const std::shared_ptr<const IndexedMesh>> meshes);

/// Hinge violations of the interior joints; gradient is d-dimensional.
double joint_limit_energy(const HandPose& pose, const HandModel& model, Eigen::VectorXd* gradient = nullptr);

/// Sum over sphere pairs on non-adjacent links of max(delta - surface gap, 0).
PointEnergy self_collision_energy(std::span<const Vec3> centers, const HandModel& model, double delta);

/// Sum over t >= 1 of ||(g_t - g_{t-1}) / dt||^2 on the stacked pose vector.
double smoothness_energy(const Trajectory& traj, std::vector<Eigen::VectorXd>* gradient = nullptr);

enum class Task : std::uint8_t { Grasp = 0, Articulation = 1, Post = 2 };

std::string_view to_string(Task task);
Task task_from_string(std::string_view name);

enum Term : int { kFc = 0, kTws, kDis, kSdf, kJoint, kSelf, kTermCount };

std::string_view term_name(Term term);

struct EnergyReport {
  double total = 0.0;
  std::array<double, kTermCount> value{};   // unweighted
  std::array<double, kTermCount> weight{};  // 0 for terms the task excludes
  std::array<Eigen::VectorXd, kTermCount> term_gradient;  // unweighted, (6 + d)
  Eigen::VectorXd gradient;                               // of total
  ContactSet contacts;                                    // subset used by the contact terms
};

/// Draws min(n, candidate_count) distinct candidate indices.
std::vector<int> select_contacts(int candidate_count, int n, std::uint64_t seed);

/// Closest-surface contact set for the given world points; normals are the
/// outward pseudonormals of the target mesh.
ContactSet make_contacts(std::span<const Vec3> points, std::span<const int> sources, const IndexedMesh& mesh);

/// Weighted task energy:
///   grasp        E_fc  + w_dis E_dis + w_sdf E_sdf + w_joint E_joint + w_self E_self
///   articulation E_tws + (same)
///   post         w_dis E_dis + w_sdf E_sdf + w_joint E_joint + w_self E_self
/// The contact subset is drawn from the hand's candidates with `seed`.
EnergyReport total_energy(const HandPose& pose, const HandModel& model, const Scene& scene, Task task,
                          const EnergyWeights& weights, std::uint64_t seed);

}  // namespace dex
