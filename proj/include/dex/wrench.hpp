#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "dex/geometry.hpp"

namespace dex {

using Wrench = Eigen::Matrix<double, 6, 1>;
using WrenchMatrix = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Contact points with object outward normals at their closest surface points.
struct ContactSet {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<int> sources;  // candidate indices on the hand

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  /// Throws unless normals are unit length and sizes agree.
  void validate() const;
};

/// G = [I_3 ... I_3; [x_1]x ... [x_n]x], 6 x 3n.
WrenchMatrix grasp_matrix(std::span<const Vec3> points);

/// Unnormalized cone edge forces: inward unit normal plus mu times a unit
/// tangent at `edges` evenly spaced azimuths.
std::vector<Vec3> friction_cone_edges(const Vec3& outward_normal, double mu, int edges);

/// Wrench images [f; (x - reference) x f] of every cone edge of every contact,
/// contact-major column order.
WrenchMatrix edge_wrenches(const ContactSet& contacts, double mu, int edges, const Vec3& reference = Vec3::Zero());

struct SimplexLsq {
  Eigen::VectorXd coefficients;
  Wrench residual = Wrench::Zero();  // W * coefficients - target
};

/// min ||W l - t|| over l >= 0, sum(l) <= 1. Solved exactly as a minimum-norm
/// point of a polytope; `iterations` caps the number of active-set additions.
SimplexLsq capped_simplex_lsq(const WrenchMatrix& w, const Wrench& target, int iterations);

/// Same problem with the equality sum(l) = 1 (distance from target to the
/// convex hull of the columns).
SimplexLsq simplex_lsq(const WrenchMatrix& w, const Wrench& target, int iterations);

}  // namespace dex
