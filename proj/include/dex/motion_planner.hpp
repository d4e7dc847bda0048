#pragma once

#include <optional>
#include <vector>

#include "dex/hand_model.hpp"
#include "dex/scene.hpp"
#include "dex/trajectory.hpp"

namespace dex {

struct PlanSettings {
  int waypoints = 32;  // frames per planned segment, endpoints included
  double dt = 0.04;
  double w_smooth = 1.0;
  double w_sdf = 1.0;
  int iterations = 400;
  double step_size = 0.05;
  double lift_height = 0.4;
  double articulation_delta = 0.5;
  double overshoot_fraction = 0.1;
  double tolerance = 1e-4;  // per-frame penetration energy counted as collision-free

  void validate() const;
};

/// w_smooth * sum ||g_i - g_{i-1}||^2 + w_sdf * sum E_sdf(g_i), with E_sdf
/// taken against every scene mesh. Gradient rows follow the frames.
double reach_energy(const Trajectory& traj, const HandModel& model, const Scene& scene, const PlanSettings& settings,
                    std::vector<Eigen::VectorXd>* gradient = nullptr);

double frame_penetration(const HandPose& pose, const HandModel& model, const Scene& scene);

struct ReachPlan {
  Trajectory trajectory;  // lowest E_reach seen, the linear start included
  bool feasible = false;
  double max_penetration = 0.0;          // worst frame of `trajectory`
  double initial_max_penetration = 0.0;  // worst frame of the linear start
  double initial_energy = 0.0;
  double energy = 0.0;
  int iterations = 0;
};

/// Linear interpolation between fixed endpoints, then descent on E_reach
/// preconditioned by the inverse smoothness Hessian. Endpoints are copied,
/// never updated. An infeasible result still carries the best trajectory.
ReachPlan plan_reach(const HandPose& start, const HandPose& goal, const Scene& scene, const HandModel& model,
                     const PlanSettings& settings);

enum class PostMotion { Lift, Articulate };

/// Lift: keyframe, an over-shoot frame flexing every joint toward its upper
/// limit by overshoot_fraction of its range, then waypoints-1 frames raising
/// the root to exactly lift_height above the keyframe.
/// Articulate: waypoints frames carrying the root along the joint screw by
/// articulation_delta with the joints held. Frame 0 is tagged Grasp.
Trajectory generate_post_grasp(const HandPose& keyframe, PostMotion motion, const std::optional<ArticulationSpec>& spec,
                               const HandModel& model, const PlanSettings& settings);

struct EulerSettings {
  double w_smooth = 1e-6;  // small: reconstruction dominates, smoothing only steers flat directions
  double dt = 0.04;
  int iterations = 200;
};

/// Per-frame Euler triples with no 2*pi wraps: nearest-branch unwrapping
/// followed by descent on w_smooth E_smooth + sum angle(R(e_t), R_t)^2.
std::vector<Vec3> continuous_euler(const std::vector<Mat3>& rotations, const EulerSettings& settings = {});

}  // namespace dex
