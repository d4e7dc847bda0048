#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dex/geometry.hpp"
#include "dex/hand_model.hpp"
#include "dex/scene.hpp"
#include "dex/wrench.hpp"

namespace dex {

struct MetricSettings {
  double contact_threshold = 0.01;
  double friction = 0.5;
  int cone_edges = 8;
  int directions = 4096;
  std::uint64_t seed = 0;
  int entropy_bins = 10000;
  // analytic feasibility proxy; not comparable to simulator success rates
  double feasible_penetration = 0.005;
  int feasible_contacts = 2;

  void validate() const;
};

struct MetricReport {
  double q1 = 0.0;
  double max_penetration = 0.0;
  int contact_count = 0;
  bool feasible = false;
  Eigen::VectorXd joint_entropy;  // per joint; empty for single-pose reports
  double h_mean = 0.0;
  double h_std = 0.0;
};

/// Candidates whose unsigned distance to the surface is <= threshold, placed
/// at their closest surface points with outward normals.
ContactSet detect_contacts(const HandPose& pose, const HandModel& model, const IndexedMesh& mesh,
                           double threshold = 0.01);

/// Unit 6D directions used by q1_estimate; the first k of a longer list equal
/// the list of length k for the same seed.
std::vector<Wrench> q1_directions(int count, std::uint64_t seed);

/// Radius of the largest origin-centred ball inside the hull of the contact
/// cone-edge wrenches (torques about `reference`), estimated as the minimum
/// support value over sampled directions. 0 unless a small cross-polytope
/// around the origin lies inside the hull.
double q1_estimate(const ContactSet& contacts, double mu, int edges, int directions, std::uint64_t seed,
                   const Vec3& reference = Vec3::Zero());

/// Max over hand spheres of max(r - sdf(center), 0).
double max_penetration(const HandPose& pose, const HandModel& model, const IndexedMesh& mesh);
/// Same, over every mesh in the scene.
double max_penetration(const HandPose& pose, const HandModel& model, const Scene& scene);

struct EntropyResult {
  Eigen::VectorXd per_joint;
  double h_mean = 0.0;
  double h_std = 0.0;
};

/// Natural-log entropy of each joint's histogram over [lower, upper] in
/// `bins` equal bins; out-of-range values land in the edge bins.
EntropyResult joint_entropy(std::span<const HandPose> poses, const HandModel& model, int bins = 10000);

/// Q1 (torques about the object centre), scene-wide penetration, contact
/// count and the feasibility proxy for one pose.
MetricReport evaluate_pose(const HandPose& pose, const HandModel& model, const Scene& scene,
                           const MetricSettings& settings = {});

}  // namespace dex
