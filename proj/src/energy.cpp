#include "dex/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "dex/error.hpp"

namespace dex {

void EnergyWeights::validate() const {
  for (double w : {w_sdf, w_dis, w_joint, w_self, w_smooth}) {
    if (!(w >= 0.0)) throw Error(ErrorCode::InvalidArgument, "energy weights must be nonnegative");
  }
  if (!(self_margin > 0.0)) throw Error(ErrorCode::InvalidArgument, "self-collision margin must be positive");
  if (!(friction > 0.0)) throw Error(ErrorCode::InvalidArgument, "friction coefficient must be positive");
  if (n_contacts < 1) throw Error(ErrorCode::InvalidArgument, "n_contacts must be at least 1");
  if (tws_targets < 1 || cone_edges < 3 || nnls_iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "tws_targets >= 1, cone_edges >= 3, nnls_iterations >= 1 required");
  }
}

PointEnergy force_closure(const ContactSet& contacts) {
  PointEnergy out;
  out.gradient.assign(contacts.size(), Vec3::Zero());
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    force += contacts.normals[i];
    torque += contacts.points[i].cross(contacts.normals[i]);
  }
  out.value = std::sqrt(force.squaredNorm() + torque.squaredNorm());
  if (out.value > 0.0) {
    // d/dx_i ||(f, tau)|| = c_i x tau / ||(f, tau)||
    for (std::size_t i = 0; i < contacts.size(); ++i) {
      out.gradient[i] = contacts.normals[i].cross(torque) / out.value;
    }
  }
  return out;
}

WrenchMatrix sample_task_wrenches(const ArticulationSpec& spec, int count, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  WrenchMatrix targets(6, count);
  const Vec3 a = spec.axis;
  const Vec3 seed_axis = std::abs(a.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 t1 = a.cross(seed_axis).normalized();
  const Vec3 t2 = a.cross(t1);
  for (int k = 0; k < count; ++k) {
    if (spec.joint_type == JointType::Revolute) {
      Vec3 dir(normal(rng), normal(rng), normal(rng));
      dir.normalize();
      const double radius = std::cbrt(unit(rng));
      targets.col(k) << radius * dir, a;
    } else {
      const double cos_max = std::cos(spec.cone_half_angle);
      const double c = 1.0 - unit(rng) * (1.0 - cos_max);
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      const double phi = 2.0 * std::numbers::pi * unit(rng);
      const Vec3 f = c * a + s * (std::cos(phi) * t1 + std::sin(phi) * t2);
      targets.col(k) << f, Vec3::Zero();
    }
  }
  return targets;
}

PointEnergy task_wrench(const ContactSet& contacts, const ArticulationSpec& spec, const EnergyWeights& weights,
                        std::uint64_t seed) {
  if (contacts.empty()) throw Error(ErrorCode::InvalidArgument, "task wrench needs at least one contact");
  const WrenchMatrix targets = sample_task_wrenches(spec, weights.tws_targets, seed);
  const int edges = weights.cone_edges;
  const WrenchMatrix w = edge_wrenches(contacts, weights.friction, edges, spec.origin);

  std::vector<Vec3> forces;
  forces.reserve(w.cols());
  for (Eigen::Index c = 0; c < w.cols(); ++c) forces.emplace_back(w.col(c).head<3>());

  PointEnergy out;
  out.gradient.assign(contacts.size(), Vec3::Zero());
  const double inv_k = 1.0 / static_cast<double>(targets.cols());
  for (Eigen::Index k = 0; k < targets.cols(); ++k) {
    const SimplexLsq fit = capped_simplex_lsq(w, targets.col(k), weights.nnls_iterations);
    const double norm = fit.residual.norm();
    out.value += inv_k * norm;
    if (norm < 1e-12) continue;
    // envelope gradient: only the torque rows of W depend on the points
    const Vec3 r_tau = fit.residual.tail<3>();
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      const double l = fit.coefficients[c];
      if (l == 0.0) continue;
      out.gradient[c / edges] += (inv_k * l / norm) * forces[c].cross(r_tau);
    }
  }
  return out;
}

PointEnergy contact_distance(std::span<const Vec3> points, const IndexedMesh& mesh) {
  PointEnergy out;
  out.gradient.assign(points.size(), Vec3::Zero());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const SdfResult s = signed_distance(points[i], mesh);
    out.value += std::abs(s.distance);
    if (s.distance > 0.0) {
      out.gradient[i] = s.gradient;
    } else if (s.distance < 0.0) {
      out.gradient[i] = -s.gradient;
    }
  }
  return out;
}

PointEnergy penetration_energy(std::span<const Vec3> centers, std::span<const double> radii,
                               std::span<const std::shared_ptr<const IndexedMesh>> meshes) {
  if (centers.size() != radii.size()) throw Error(ErrorCode::DimensionMismatch, "sphere centers and radii differ in count");
  PointEnergy out;
  out.gradient.assign(centers.size(), Vec3::Zero());
  for (const auto& m : meshes) {
    const Box3& bounds = m->tree.nodes().front().box;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const double r = radii[i];
      // outside the bounding box by more than r cannot penetrate
      if (bounds.squaredExteriorDistance(centers[i]) > r * r) continue;
      const SdfResult s = signed_distance(centers[i], *m);
      const double depth = r - s.distance;
      if (depth > 0.0) {
        out.value += depth;
        out.gradient[i] -= s.gradient;
      }
    }
  }
  return out;
}

double joint_limit_energy(const HandPose& pose, const HandModel& model, Eigen::VectorXd* gradient) {
  if (pose.dof() != model.dof()) throw Error(ErrorCode::DimensionMismatch, "pose dof does not match hand");
  if (gradient) gradient->setZero(model.dof());
  double e = 0.0;
  for (int j = 0; j < model.dof(); ++j) {
    const double th = pose.joints[j];
    const auto& joint = model.joints()[j];
    if (th > joint.upper) {
      e += th - joint.upper;
      if (gradient) (*gradient)[j] = 1.0;
    } else if (th < joint.lower) {
      e += joint.lower - th;
      if (gradient) (*gradient)[j] = -1.0;
    }
  }
  return e;
}

PointEnergy self_collision_energy(std::span<const Vec3> centers, const HandModel& model, double delta) {
  const auto& spheres = model.spheres();
  if (centers.size() != spheres.size()) throw Error(ErrorCode::DimensionMismatch, "sphere count does not match hand");
  PointEnergy out;
  out.gradient.assign(centers.size(), Vec3::Zero());
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    for (std::size_t j = i + 1; j < spheres.size(); ++j) {
      if (model.links_adjacent(spheres[i].link, spheres[j].link)) continue;
      const Vec3 diff = centers[i] - centers[j];
      const double dist = diff.norm();
      const double gap = dist - spheres[i].radius - spheres[j].radius;
      const double violation = delta - gap;
      if (violation <= 0.0) continue;
      out.value += violation;
      if (dist > 0.0) {
        const Vec3 u = diff / dist;
        out.gradient[i] -= u;
        out.gradient[j] += u;
      }
    }
  }
  return out;
}

double smoothness_energy(const Trajectory& traj, std::vector<Eigen::VectorXd>* gradient) {
  if (traj.frames.size() < 2) throw Error(ErrorCode::InvalidArgument, "smoothness needs at least 2 frames");
  if (!(traj.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "trajectory dt must be positive");
  const double inv_dt2 = 1.0 / (traj.dt * traj.dt);
  std::vector<Eigen::VectorXd> g;
  g.reserve(traj.frames.size());
  for (const auto& f : traj.frames) g.push_back(f.to_vector());
  if (gradient) gradient->assign(g.size(), Eigen::VectorXd::Zero(g.front().size()));
  double e = 0.0;
  for (std::size_t t = 1; t < g.size(); ++t) {
    if (g[t].size() != g[t - 1].size()) throw Error(ErrorCode::DimensionMismatch, "trajectory frames differ in dof");
    const Eigen::VectorXd d = g[t] - g[t - 1];
    e += d.squaredNorm() * inv_dt2;
    if (gradient) {
      (*gradient)[t] += 2.0 * inv_dt2 * d;
      (*gradient)[t - 1] -= 2.0 * inv_dt2 * d;
    }
  }
  return e;
}

std::string_view to_string(Task task) {
  switch (task) {
    case Task::Grasp: return "grasp";
    case Task::Articulation: return "articulation";
    case Task::Post: return "post";
  }
  return "unknown";
}

Task task_from_string(std::string_view name) {
  if (name == "grasp") return Task::Grasp;
  if (name == "articulation") return Task::Articulation;
  if (name == "post") return Task::Post;
  throw Error(ErrorCode::InvalidArgument, "unknown task '" + std::string(name) + "'");
}

std::string_view term_name(Term term) {
  static constexpr std::array<std::string_view, kTermCount> names = {"fc", "tws", "dis", "sdf", "joint", "self"};
  return names[term];
}

std::vector<int> select_contacts(int candidate_count, int n, std::uint64_t seed) {
  std::vector<int> idx(candidate_count);
  std::iota(idx.begin(), idx.end(), 0);
  const int k = std::min(n, candidate_count);
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, candidate_count - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

ContactSet make_contacts(std::span<const Vec3> points, std::span<const int> sources, const IndexedMesh& mesh) {
  ContactSet c;
  c.points.assign(points.begin(), points.end());
  c.sources.assign(sources.begin(), sources.end());
  c.normals.reserve(points.size());
  for (const auto& p : points) c.normals.push_back(signed_distance(p, mesh).normal);
  return c;
}

namespace {

Eigen::VectorXd pull_back(const Eigen::MatrixXd& jac, const std::vector<int>& rows, const std::vector<Vec3>& grads,
                          int n) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].isZero(0.0)) continue;
    g.noalias() += jac.middleRows<3>(3 * rows[i]).transpose() * grads[i];
  }
  return g;
}

}  // namespace

EnergyReport total_energy(const HandPose& pose, const HandModel& model, const Scene& scene, Task task,
                          const EnergyWeights& weights, std::uint64_t seed) {
  if (task == Task::Articulation && !scene.articulation) {
    throw Error(ErrorCode::MissingArticulationSpec, "articulation task requires an articulation spec");
  }
  const int n = 6 + model.dof();
  const HandPlacement pl = forward_kinematics(model, pose);
  const PoseJacobians jac = pose_jacobians(model, pl);
  const IndexedMesh& target = scene.target_mesh();

  EnergyReport r;
  r.weight = {task == Task::Grasp ? 1.0 : 0.0, task == Task::Articulation ? 1.0 : 0.0, weights.w_dis,
              weights.w_sdf, weights.w_joint, weights.w_self};
  for (auto& g : r.term_gradient) g = Eigen::VectorXd::Zero(n);

  const std::vector<int> selected =
      select_contacts(static_cast<int>(model.contact_candidates().size()), weights.n_contacts, seed);
  std::vector<Vec3> points;
  points.reserve(selected.size());
  for (int i : selected) points.push_back(pl.candidates[i]);
  r.contacts = make_contacts(points, selected, target);

  if (task == Task::Grasp && !selected.empty()) {
    ContactSet centered = r.contacts;
    const Vec3 c = scene.target_center();
    for (auto& p : centered.points) p -= c;
    const PointEnergy fc = force_closure(centered);
    r.value[kFc] = fc.value;
    r.term_gradient[kFc] = pull_back(jac.candidates, selected, fc.gradient, n);
  }
  if (task == Task::Articulation && !selected.empty()) {
    const PointEnergy tws = task_wrench(r.contacts, *scene.articulation, weights, seed);
    r.value[kTws] = tws.value;
    r.term_gradient[kTws] = pull_back(jac.candidates, selected, tws.gradient, n);
  }

  const PointEnergy dis = contact_distance(points, target);
  r.value[kDis] = dis.value;
  r.term_gradient[kDis] = pull_back(jac.candidates, selected, dis.gradient, n);

  std::vector<double> radii;
  radii.reserve(model.spheres().size());
  for (const auto& s : model.spheres()) radii.push_back(s.radius);
  std::vector<int> all_spheres(model.spheres().size());
  std::iota(all_spheres.begin(), all_spheres.end(), 0);

  const PointEnergy sdf = penetration_energy(pl.sphere_centers, radii, scene.meshes);
  r.value[kSdf] = sdf.value;
  r.term_gradient[kSdf] = pull_back(jac.spheres, all_spheres, sdf.gradient, n);

  Eigen::VectorXd joint_grad;
  r.value[kJoint] = joint_limit_energy(pose, model, &joint_grad);
  r.term_gradient[kJoint].tail(model.dof()) = joint_grad;

  const PointEnergy self = self_collision_energy(pl.sphere_centers, model, weights.self_margin);
  r.value[kSelf] = self.value;
  r.term_gradient[kSelf] = pull_back(jac.spheres, all_spheres, self.gradient, n);

  r.gradient = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < kTermCount; ++t) {
    if (r.weight[t] == 0.0) continue;
    r.total += r.weight[t] * r.value[t];
    r.gradient += r.weight[t] * r.term_gradient[t];
  }
  return r;
}

}  // namespace dex
