#include "dex/motion_planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include "dex/energy.hpp"
#include "dex/error.hpp"
#include "dex/rotation.hpp"

namespace dex {

void PlanSettings::validate() const {
  if (waypoints < 2) throw Error(ErrorCode::InvalidArgument, "plan waypoints must be >= 2");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "plan dt must be positive");
  if (!(w_smooth >= 0.0) || !(w_sdf >= 0.0)) throw Error(ErrorCode::InvalidArgument, "plan weights must be nonnegative");
  if (iterations < 0) throw Error(ErrorCode::InvalidArgument, "plan iterations must be nonnegative");
  if (!(step_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "plan step_size must be positive");
  if (!std::isfinite(lift_height) || !std::isfinite(articulation_delta)) {
    throw Error(ErrorCode::InvalidArgument, "lift height and articulation delta must be finite");
  }
  if (!(overshoot_fraction >= 0.0 && overshoot_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "overshoot_fraction must lie in [0, 1]");
  }
  if (!(tolerance >= 0.0)) throw Error(ErrorCode::InvalidArgument, "plan tolerance must be nonnegative");
}

namespace {

std::vector<double> sphere_radii(const HandModel& model) {
  std::vector<double> r;
  r.reserve(model.spheres().size());
  for (const auto& s : model.spheres()) r.push_back(s.radius);
  return r;
}

double frame_sdf(const HandPose& pose, const HandModel& model, const Scene& scene, const std::vector<double>& radii,
                 Eigen::VectorXd* gradient) {
  const HandPlacement pl = forward_kinematics(model, pose);
  const PointEnergy e = penetration_energy(pl.sphere_centers, radii, scene.meshes);
  if (gradient) {
    gradient->setZero(pose.size());
    if (e.value > 0.0) {
      const PoseJacobians jac = pose_jacobians(model, pl);
      for (std::size_t i = 0; i < e.gradient.size(); ++i) {
        if (!e.gradient[i].isZero()) *gradient += jac.sphere(static_cast<int>(i)).transpose() * e.gradient[i];
      }
    }
  }
  return e.value;
}

}  // namespace

double frame_penetration(const HandPose& pose, const HandModel& model, const Scene& scene) {
  return frame_sdf(pose, model, scene, sphere_radii(model), nullptr);
}

double reach_energy(const Trajectory& traj, const HandModel& model, const Scene& scene, const PlanSettings& settings,
                    std::vector<Eigen::VectorXd>* gradient) {
  traj.validate();
  const std::vector<double> radii = sphere_radii(model);
  const int n = traj.frames.front().size();
  if (gradient) gradient->assign(traj.size(), Eigen::VectorXd::Zero(n));
  double e = 0.0;
  Eigen::VectorXd prev = traj.frames.front().to_vector();
  Eigen::VectorXd g;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const Eigen::VectorXd cur = traj.frames[t].to_vector();
    if (t > 0) {
      const Eigen::VectorXd d = cur - prev;
      e += settings.w_smooth * d.squaredNorm();
      if (gradient) {
        (*gradient)[t] += 2.0 * settings.w_smooth * d;
        (*gradient)[t - 1] -= 2.0 * settings.w_smooth * d;
      }
    }
    if (settings.w_sdf > 0.0) {
      e += settings.w_sdf * frame_sdf(traj.frames[t], model, scene, radii, gradient ? &g : nullptr);
      if (gradient) (*gradient)[t] += settings.w_sdf * g;
    }
    prev = cur;
  }
  return e;
}

ReachPlan plan_reach(const HandPose& start, const HandPose& goal, const Scene& scene, const HandModel& model,
                     const PlanSettings& settings) {
  settings.validate();
  if (!start.is_finite() || !goal.is_finite()) throw Error(ErrorCode::InvalidArgument, "reach endpoints must be finite");
  if (start.dof() != model.dof() || goal.dof() != model.dof()) {
    throw Error(ErrorCode::DimensionMismatch, "reach endpoints do not match the hand dof");
  }
  const int frames = settings.waypoints;
  const Eigen::VectorXd a = start.to_vector();
  const Eigen::VectorXd b = goal.to_vector();

  Trajectory traj;
  traj.dt = settings.dt;
  traj.frames.reserve(frames);
  for (int i = 0; i < frames; ++i) {
    if (i == 0) {
      traj.frames.push_back(start);
    } else if (i == frames - 1) {
      traj.frames.push_back(goal);
    } else {
      const double s = static_cast<double>(i) / (frames - 1);
      traj.frames.push_back(HandPose::from_vector(a + s * (b - a)));
    }
  }
  traj.stages.assign(frames, Stage::Reach);
  traj.stages.back() = Stage::Grasp;

  const std::vector<double> radii = sphere_radii(model);
  auto worst_frame = [&](const Trajectory& t) {
    double w = 0.0;
    for (const auto& f : t.frames) w = std::max(w, frame_sdf(f, model, scene, radii, nullptr));
    return w;
  };

  ReachPlan out;
  std::vector<Eigen::VectorXd> grad;
  out.initial_energy = reach_energy(traj, model, scene, settings, &grad);
  out.energy = out.initial_energy;
  out.initial_max_penetration = worst_frame(traj);
  out.trajectory = traj;

  const int m = frames - 2;
  if (m > 0 && settings.iterations > 0) {
    // metric: Hessian of the smoothness term over the interior frames
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
    const double w = settings.w_smooth > 0.0 ? settings.w_smooth : 0.5;
    for (int i = 0; i < m; ++i) {
      h(i, i) = 4.0 * w;
      if (i + 1 < m) h(i, i + 1) = h(i + 1, i) = -2.0 * w;
    }
    const Eigen::LLT<Eigen::MatrixXd> metric(h);
    const int n = a.size();
    Eigen::MatrixXd x(m, n), g(m, n);
    for (int i = 0; i < m; ++i) x.row(i) = traj.frames[i + 1].to_vector().transpose();

    for (int it = 0; it < settings.iterations; ++it) {
      for (int i = 0; i < m; ++i) g.row(i) = grad[i + 1].transpose();
      const double phase = 0.5 * (1.0 + std::cos(std::numbers::pi * it / settings.iterations));
      x -= settings.step_size * phase * metric.solve(g);
      for (int i = 0; i < m; ++i) traj.frames[i + 1] = HandPose::from_vector(x.row(i).transpose());
      const double e = reach_energy(traj, model, scene, settings, &grad);
      if (!std::isfinite(e)) throw Error(ErrorCode::NonFiniteEnergy, "reach energy is not finite");
      if (e < out.energy) {
        out.energy = e;
        out.trajectory = traj;
        out.iterations = it + 1;
      }
    }
  }
  out.max_penetration = worst_frame(out.trajectory);
  out.feasible = out.max_penetration <= settings.tolerance;
  return out;
}

Trajectory generate_post_grasp(const HandPose& keyframe, PostMotion motion, const std::optional<ArticulationSpec>& spec,
                               const HandModel& model, const PlanSettings& settings) {
  settings.validate();
  if (!keyframe.is_finite()) throw Error(ErrorCode::InvalidArgument, "keyframe must be finite");
  if (keyframe.dof() != model.dof()) throw Error(ErrorCode::DimensionMismatch, "keyframe dof does not match hand");
  Trajectory traj;
  traj.dt = settings.dt;
  traj.frames.push_back(keyframe);
  const int steps = settings.waypoints - 1;

  if (motion == PostMotion::Lift) {
    HandPose grip = keyframe;
    const Eigen::VectorXd lo = model.lower_limits();
    const Eigen::VectorXd hi = model.upper_limits();
    for (int j = 0; j < model.dof(); ++j) {
      grip.joints[j] = std::min(hi[j], grip.joints[j] + settings.overshoot_fraction * (hi[j] - lo[j]));
    }
    traj.frames.push_back(grip);
    const double z0 = keyframe.translation.z();
    for (int k = 1; k <= steps; ++k) {
      HandPose f = grip;
      f.translation.z() = k == steps ? z0 + settings.lift_height
                                     : z0 + settings.lift_height * static_cast<double>(k) / steps;
      traj.frames.push_back(f);
    }
  } else {
    if (!spec) throw Error(ErrorCode::MissingArticulationSpec, "articulation motion needs an articulation spec");
    spec->validate();
    const Vec3 axis = spec->axis.normalized();
    const Mat3 r0 = keyframe.rotation();
    Vec3 euler = keyframe.euler;
    for (int k = 1; k <= steps; ++k) {
      const double q = settings.articulation_delta * static_cast<double>(k) / steps;
      HandPose f = keyframe;
      if (spec->joint_type == JointType::Revolute) {
        const Mat3 rot = Eigen::AngleAxisd(q, axis).toRotationMatrix();
        f.translation = rot * (keyframe.translation - spec->origin) + spec->origin;
        euler = nearest_euler_xyz(rot * r0, euler);
        f.euler = euler;
      } else {
        f.translation = keyframe.translation + q * axis;
      }
      traj.frames.push_back(f);
    }
  }
  traj.stages.assign(traj.frames.size(), Stage::Post);
  traj.stages.front() = Stage::Grasp;
  return traj;
}

std::vector<Vec3> continuous_euler(const std::vector<Mat3>& rotations, const EulerSettings& settings) {
  if (!(settings.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (!(settings.w_smooth >= 0.0)) throw Error(ErrorCode::InvalidArgument, "w_smooth must be nonnegative");
  for (std::size_t t = 0; t < rotations.size(); ++t) {
    if (!is_rotation_matrix(rotations[t])) {
      throw Error(ErrorCode::InvalidArgument, "frame " + std::to_string(t) + " is not a rotation matrix");
    }
  }
  const std::size_t n = rotations.size();
  std::vector<Vec3> e(n);
  if (n == 0) return e;
  e[0] = matrix_to_euler_xyz(rotations[0]);
  for (std::size_t t = 1; t < n; ++t) e[t] = nearest_euler_xyz(rotations[t], e[t - 1]);

  const double ws = settings.w_smooth / (settings.dt * settings.dt);
  auto objective = [&](const std::vector<Vec3>& v, std::vector<Vec3>* grad) {
    double f = 0.0;
    if (grad) grad->assign(n, Vec3::Zero());
    for (std::size_t t = 0; t < n; ++t) {
      // left perturbation of R(e) R_t^T: the gradient of angle^2 is 2 * log
      const Vec3 w = rotation_log(euler_xyz_to_matrix(v[t]) * rotations[t].transpose());
      f += w.squaredNorm();
      if (grad) (*grad)[t] += 2.0 * euler_xyz_axes(v[t]).transpose() * w;
      if (t > 0) {
        const Vec3 d = v[t] - v[t - 1];
        f += ws * d.squaredNorm();
        if (grad) {
          (*grad)[t] += 2.0 * ws * d;
          (*grad)[t - 1] -= 2.0 * ws * d;
        }
      }
    }
    return f;
  };

  const double step = 1.0 / (6.0 + 8.0 * ws);
  std::vector<Vec3> grad, best = e;
  double best_f = objective(e, &grad);
  for (int it = 0; it < settings.iterations; ++it) {
    for (std::size_t t = 0; t < n; ++t) e[t] -= step * grad[t];
    const double f = objective(e, &grad);
    if (f < best_f) {
      best_f = f;
      best = e;
    }
  }
  // project each frame back onto its rotation; damping keeps the step small
  // along the free direction near gimbal lock
  for (std::size_t t = 0; t < n; ++t) {
    for (int it = 0; it < 20; ++it) {
      const Vec3 w = rotation_log(euler_xyz_to_matrix(best[t]) * rotations[t].transpose());
      if (w.norm() < 1e-12) break;
      const Mat3 a = euler_xyz_axes(best[t]);
      best[t] -= (a.transpose() * a + 1e-9 * Mat3::Identity()).ldlt().solve(a.transpose() * w);
    }
  }
  return best;
}

}  // namespace dex
