#include "dex/grasp_optimizer.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "dex/error.hpp"
#include "dex/parallel.hpp"
#include "dex/rotation.hpp"

namespace dex {

namespace {
constexpr int kPlacementAttempts = 64;
}  // namespace

void OptimSettings::validate() const {
  if (steps < 0) throw Error(ErrorCode::InvalidArgument, "optim steps must be nonnegative");
  if (!(step_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "optim step_size must be positive");
  if (!(noise_scale >= 0.0)) throw Error(ErrorCode::InvalidArgument, "optim noise_scale must be nonnegative");
  if (restarts < 1) throw Error(ErrorCode::InvalidArgument, "optim restarts must be at least 1");
  if (resample_contacts_every < 1) throw Error(ErrorCode::InvalidArgument, "resample_contacts_every must be >= 1");
  for (double s : {translation_scale, rotation_scale, joint_scale}) {
    if (!(s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "block scales must be nonnegative");
  }
  if (!(rms_decay > 0.0 && rms_decay < 1.0)) throw Error(ErrorCode::InvalidArgument, "rms_decay must lie in (0, 1)");
  if (trace_every < 1) throw Error(ErrorCode::InvalidArgument, "trace_every must be >= 1");
}

OptimSettings OptimSettings::post_defaults() {
  OptimSettings s;
  s.steps = 100;
  s.step_size = 0.002;
  s.noise_scale = 0.0;
  s.restarts = 1;
  s.translation_scale = 0.1;
  s.rotation_scale = 0.1;
  s.joint_scale = 1.0;
  s.trace_every = 1;
  return s;
}

std::vector<HandPose> sample_initializations(const HandModel& model, const Scene& scene, int count,
                                             std::uint64_t seed) {
  if (count < 0) throw Error(ErrorCode::InvalidArgument, "initialization count must be nonnegative");
  const TriMesh& mesh = scene.target_mesh().mesh;
  const double radius = mesh.bounding_radius();
  if (!(radius > 1e-9) || !std::isfinite(radius)) {
    throw Error(ErrorCode::DegenerateGeometry, "object bounds are degenerate");
  }
  const Vec3 center = mesh.center();
  const HandPose rest = model.mid_range_pose();
  const HandPlacement local = forward_kinematics(model, rest);
  const Vec3 palm_local = local.palm_center;
  const Vec3 heading_local = heading_direction(local);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::vector<HandPose> out;
  out.reserve(count);
  auto blocked = [&](const HandPose& pose) {
    // a start already inside a fixture (table slab) rarely recovers
    if (scene.meshes.size() < 2) return false;
    const HandPlacement pl = forward_kinematics(model, pose);
    for (std::size_t m = 0; m < scene.meshes.size(); ++m) {
      if (static_cast<int>(m) == scene.target) continue;
      for (std::size_t s = 0; s < pl.sphere_centers.size(); ++s) {
        if (signed_distance(pl.sphere_centers[s], *scene.meshes[m]).distance < model.spheres()[s].radius) return true;
      }
    }
    return false;
  };

  for (int i = 0; i < count; ++i) {
    HandPose pose = rest;
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      Vec3 u(normal(rng), normal(rng), normal(rng));
      while (u.norm() < 1e-12) u = Vec3(normal(rng), normal(rng), normal(rng));
      u.normalize();
      const Vec3 palm = center + 1.25 * radius * u;
      const Vec3 aim = -u;
      const Mat3 align = Eigen::Quaterniond::FromTwoVectors(heading_local, aim).toRotationMatrix();
      const Mat3 rot = Eigen::AngleAxisd(angle(rng), aim).toRotationMatrix() * align;
      pose.euler = matrix_to_euler_xyz(rot);
      pose.translation = palm - euler_xyz_to_matrix(pose.euler) * palm_local;
      if (!blocked(pose)) break;
    }
    out.push_back(pose);
  }
  return out;
}

namespace {

OptimResult run_descent(const HandPose& init, Task task, const Scene& scene, const HandModel& model,
                        const EnergyWeights& weights, const OptimSettings& settings) {
  settings.validate();
  weights.validate();
  if (!init.is_finite()) throw Error(ErrorCode::NonFiniteEnergy, "initial pose is not finite");
  if (init.dof() != model.dof()) throw Error(ErrorCode::DimensionMismatch, "initial pose dof does not match hand");

  const int n = init.size();
  Eigen::VectorXd block(n);
  block.head<3>().setConstant(settings.translation_scale);
  block.segment<3>(3).setConstant(settings.rotation_scale);
  block.tail(model.dof()).setConstant(settings.joint_scale);

  std::mt19937_64 rng(settings.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  OptimResult out;
  out.seed = settings.seed;
  Eigen::VectorXd x = init.to_vector();
  Eigen::VectorXd rms = Eigen::VectorXd::Zero(n);
  std::uint64_t contact_seed = rng();

  auto evaluate = [&](const Eigen::VectorXd& v) {
    EnergyReport r = total_energy(HandPose::from_vector(v), model, scene, task, weights, contact_seed);
    if (!std::isfinite(r.total) || !r.gradient.allFinite()) {
      throw Error(ErrorCode::NonFiniteEnergy, "energy is not finite");
    }
    return r;
  };

  EnergyReport report = evaluate(x);
  out.initial_energy = report.total;
  out.best_energy = report.total;
  out.pose = init;
  out.report = report;
  out.energy_trace.push_back(report.total);

  const int steps = settings.steps;
  double decay_power = 1.0;
  for (int t = 0; t < steps; ++t) {
    const double phase = 0.5 * (1.0 + std::cos(std::numbers::pi * t / steps));
    const double eta = settings.step_size * phase;
    const double sigma = settings.noise_scale * std::pow(phase, settings.noise_decay_power);

    const Eigen::VectorXd& g = report.gradient;
    rms = settings.rms_decay * rms + (1.0 - settings.rms_decay) * g.cwiseAbs2();
    decay_power *= settings.rms_decay;
    const Eigen::VectorXd denom = (rms / (1.0 - decay_power)).cwiseSqrt().array() + 1e-12;
    x -= eta * block.cwiseProduct(g.cwiseQuotient(denom));
    if (sigma > 0.0) {
      for (int k = 0; k < n; ++k) x[k] += sigma * block[k] * normal(rng);
    }

    if ((t + 1) % settings.resample_contacts_every == 0) contact_seed = rng();
    report = evaluate(x);
    if (report.total < out.best_energy) {
      out.best_energy = report.total;
      out.best_step = t + 1;
      out.pose = HandPose::from_vector(x);
      out.report = report;
    }
    if ((t + 1) % settings.trace_every == 0 || t + 1 == steps) out.energy_trace.push_back(report.total);
  }
  return out;
}

}  // namespace

OptimResult optimize_grasp(const HandPose& init, Task task, const Scene& scene, const HandModel& model,
                           const EnergyWeights& weights, const OptimSettings& settings) {
  return run_descent(init, task, scene, model, weights, settings);
}

OptimResult post_optimize(const HandPose& proposal, const Scene& scene, const HandModel& model,
                          const EnergyWeights& weights, const OptimSettings& settings) {
  return run_descent(proposal, Task::Post, scene, model, weights, settings);
}

std::vector<OptimResult> synthesize_grasps(const HandModel& model, const Scene& scene, Task task,
                                           const EnergyWeights& weights, const OptimSettings& settings, int jobs) {
  settings.validate();
  const std::vector<HandPose> inits = sample_initializations(model, scene, settings.restarts, settings.seed);
  std::vector<OptimResult> results(inits.size());
  parallel_for(static_cast<int>(inits.size()), jobs, [&](int i) {
    OptimSettings local = settings;
    local.seed = derive_seed(settings.seed, static_cast<std::uint64_t>(i));
    results[i] = optimize_grasp(inits[i], task, scene, model, weights, local);
    results[i].init_index = i;
  });
  return results;
}

}  // namespace dex
