#include "dex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dex/error.hpp"

namespace dex {

void MetricSettings::validate() const {
  if (!(contact_threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "contact threshold must be positive");
  if (!(friction > 0.0)) throw Error(ErrorCode::InvalidArgument, "friction must be positive");
  if (cone_edges < 3) throw Error(ErrorCode::InvalidArgument, "cone_edges must be >= 3");
  if (directions < 1) throw Error(ErrorCode::InvalidArgument, "directions must be >= 1");
  if (entropy_bins < 2) throw Error(ErrorCode::InvalidArgument, "entropy bins must be >= 2");
}

ContactSet detect_contacts(const HandPose& pose, const HandModel& model, const IndexedMesh& mesh, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "contact threshold must be positive");
  const HandPlacement pl = forward_kinematics(model, pose);
  ContactSet out;
  for (std::size_t i = 0; i < pl.candidates.size(); ++i) {
    const SdfResult s = signed_distance(pl.candidates[i], mesh);
    if (std::abs(s.distance) > threshold) continue;
    out.points.push_back(s.closest_point);
    out.normals.push_back(s.normal);
    out.sources.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<Wrench> q1_directions(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Wrench> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    Wrench u;
    for (int k = 0; k < 6; ++k) u[k] = normal(rng);
    const double len = u.norm();
    if (len < 1e-12) continue;
    out.push_back(u / len);
  }
  return out;
}

double q1_estimate(const ContactSet& contacts, double mu, int edges, int directions, std::uint64_t seed,
                   const Vec3& reference) {
  if (!(mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "q1 friction must be positive");
  if (contacts.empty()) return 0.0;
  const WrenchMatrix w = edge_wrenches(contacts, mu, edges, reference);
  const double scale = std::sqrt(w.colwise().squaredNorm().maxCoeff());

  // interior test: the cross-polytope of radius eps must fit in the hull
  const double eps = 1e-6 * scale;
  for (int k = 0; k < 12; ++k) {
    Wrench probe = Wrench::Zero();
    probe[k / 2] = (k % 2 ? -eps : eps);
    if (simplex_lsq(w, probe, 1000).residual.norm() > 1e-9 * scale) return 0.0;
  }

  double q1 = std::numeric_limits<double>::infinity();
  for (const Wrench& u : q1_directions(directions, seed)) {
    q1 = std::min(q1, (u.transpose() * w).maxCoeff());
  }
  return std::max(q1, 0.0);
}

double max_penetration(const HandPose& pose, const HandModel& model, const IndexedMesh& mesh) {
  const HandPlacement pl = forward_kinematics(model, pose);
  double worst = 0.0;
  for (std::size_t i = 0; i < pl.sphere_centers.size(); ++i) {
    const double r = model.spheres()[i].radius;
    worst = std::max(worst, r - signed_distance(pl.sphere_centers[i], mesh).distance);
  }
  return worst;
}

double max_penetration(const HandPose& pose, const HandModel& model, const Scene& scene) {
  double worst = 0.0;
  for (const auto& m : scene.meshes) worst = std::max(worst, max_penetration(pose, model, *m));
  return worst;
}

EntropyResult joint_entropy(std::span<const HandPose> poses, const HandModel& model, int bins) {
  if (poses.empty()) throw Error(ErrorCode::InvalidArgument, "entropy needs at least one pose");
  if (bins < 2) throw Error(ErrorCode::InvalidArgument, "entropy needs at least 2 bins");
  const int d = model.dof();
  EntropyResult out;
  out.per_joint = Eigen::VectorXd::Zero(d);
  std::vector<std::int64_t> hist(bins);
  const double total = static_cast<double>(poses.size());
  for (int j = 0; j < d; ++j) {
    std::fill(hist.begin(), hist.end(), 0);
    const double lo = model.joints()[j].lower;
    const double hi = model.joints()[j].upper;
    for (const auto& p : poses) {
      if (p.dof() != d) throw Error(ErrorCode::DimensionMismatch, "pose dof does not match hand");
      const double f = std::floor((p.joints[j] - lo) / (hi - lo) * bins);
      const int b = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(bins - 1)));
      ++hist[b];
    }
    double h = 0.0;
    for (std::int64_t c : hist) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / total;
      h -= p * std::log(p);
    }
    out.per_joint[j] = std::max(h, 0.0);
  }
  if (d > 0) {
    out.h_mean = out.per_joint.mean();
    out.h_std = std::sqrt((out.per_joint.array() - out.h_mean).square().mean());
  }
  return out;
}

MetricReport evaluate_pose(const HandPose& pose, const HandModel& model, const Scene& scene,
                           const MetricSettings& settings) {
  settings.validate();
  MetricReport r;
  const ContactSet contacts = detect_contacts(pose, model, scene.target_mesh(), settings.contact_threshold);
  r.contact_count = static_cast<int>(contacts.size());
  r.q1 = q1_estimate(contacts, settings.friction, settings.cone_edges, settings.directions, settings.seed,
                     scene.target_center());
  r.max_penetration = max_penetration(pose, model, scene);
  r.feasible = r.max_penetration <= settings.feasible_penetration && r.contact_count >= settings.feasible_contacts;
  return r;
}

}  // namespace dex
