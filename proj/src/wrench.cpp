#include "dex/wrench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "dex/error.hpp"
#include "dex/rotation.hpp"

namespace dex {

void ContactSet::validate() const {
  if (normals.size() != points.size()) throw Error(ErrorCode::DimensionMismatch, "contact normals and points differ in count");
  for (const auto& n : normals) {
    if (std::abs(n.norm() - 1.0) > 1e-6) throw Error(ErrorCode::InvalidArgument, "contact normal is not unit length");
  }
}

WrenchMatrix grasp_matrix(std::span<const Vec3> points) {
  WrenchMatrix g(6, 3 * points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    g.block<3, 3>(0, 3 * i).setIdentity();
    g.block<3, 3>(3, 3 * i) = cross_matrix(points[i]);
  }
  return g;
}

std::vector<Vec3> friction_cone_edges(const Vec3& n, double mu, int edges) {
  const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 t1 = n.cross(seed).normalized();
  const Vec3 t2 = n.cross(t1);
  std::vector<Vec3> out;
  out.reserve(edges);
  for (int k = 0; k < edges; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / edges;
    out.push_back(-n + mu * (std::cos(phi) * t1 + std::sin(phi) * t2));
  }
  return out;
}

WrenchMatrix edge_wrenches(const ContactSet& contacts, double mu, int edges, const Vec3& reference) {
  WrenchMatrix w(6, contacts.size() * edges);
  int col = 0;
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const Vec3 arm = contacts.points[i] - reference;
    for (const Vec3& f : friction_cone_edges(contacts.normals[i], mu, edges)) {
      w.col(col).head<3>() = f;
      w.col(col).tail<3>() = arm.cross(f);
      ++col;
    }
  }
  return w;
}

namespace {

// Minimum-norm point of the convex hull of the columns of p (Wolfe's
// active-set method). Returns barycentric weights.
Eigen::VectorXd min_norm_point(const Eigen::Matrix<double, 6, Eigen::Dynamic>& p, int max_major) {
  const Eigen::Index m = p.cols();
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(m);
  const Eigen::VectorXd sq = p.colwise().squaredNorm().transpose();
  const double scale = std::max(sq.maxCoeff(), 1e-300);
  Eigen::Index first = 0;
  sq.minCoeff(&first);

  std::vector<Eigen::Index> active = {first};
  std::vector<double> lambda = {1.0};
  Wrench x = p.col(first);

  for (int major = 0; major < max_major; ++major) {
    Eigen::Index j = 0;
    const double best = (p.transpose() * x).minCoeff(&j);
    if (x.squaredNorm() - best <= 1e-13 * scale) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    active.push_back(j);
    lambda.push_back(0.0);

    for (int minor = 0; minor < 64; ++minor) {
      const auto k = static_cast<Eigen::Index>(active.size());
      Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(k + 1, k + 1);
      for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) sys(a, b) = p.col(active[a]).dot(p.col(active[b]));
        sys(a, k) = 1.0;
        sys(k, a) = 1.0;
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
      rhs[k] = 1.0;
      const Eigen::VectorXd alpha = sys.completeOrthogonalDecomposition().solve(rhs).head(k);

      if ((alpha.array() > 1e-14).all()) {
        for (Eigen::Index a = 0; a < k; ++a) lambda[a] = alpha[a];
        break;
      }
      double theta = 1.0;
      for (Eigen::Index a = 0; a < k; ++a) {
        if (alpha[a] <= 1e-14) theta = std::min(theta, lambda[a] / (lambda[a] - alpha[a]));
      }
      std::vector<Eigen::Index> kept;
      std::vector<double> kept_lambda;
      for (Eigen::Index a = 0; a < k; ++a) {
        const double l = lambda[a] + theta * (alpha[a] - lambda[a]);
        if (l > 1e-14) {
          kept.push_back(active[a]);
          kept_lambda.push_back(l);
        }
      }
      if (kept.empty()) {
        kept = {active.back()};
        kept_lambda = {1.0};
      }
      active = std::move(kept);
      lambda = std::move(kept_lambda);
      const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
      for (double& l : lambda) l /= total;
    }
    x.setZero();
    for (std::size_t a = 0; a < active.size(); ++a) x += lambda[a] * p.col(active[a]);
  }
  for (std::size_t a = 0; a < active.size(); ++a) weights[active[a]] = lambda[a];
  return weights;
}

}  // namespace

SimplexLsq capped_simplex_lsq(const WrenchMatrix& w, const Wrench& target, int iterations) {
  // the capped simplex image is the hull of the columns together with the origin
  Eigen::Matrix<double, 6, Eigen::Dynamic> p(6, w.cols() + 1);
  p.col(0) = -target;
  p.rightCols(w.cols()) = w.colwise() - target;
  const Eigen::VectorXd hull = min_norm_point(p, iterations);
  SimplexLsq out;
  out.coefficients = hull.tail(w.cols());
  out.residual = w * out.coefficients - target;
  return out;
}

SimplexLsq simplex_lsq(const WrenchMatrix& w, const Wrench& target, int iterations) {
  SimplexLsq out;
  if (w.cols() == 0) {
    out.coefficients.resize(0);
    out.residual = -target;
    return out;
  }
  out.coefficients = min_norm_point(w.colwise() - target, iterations);
  out.residual = w * out.coefficients - target;
  return out;
}

}  // namespace dex
