#pragma once
// Independent reference computations used only by tests. Nothing here calls
// into the engine's query paths.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "dex/geometry.hpp"

namespace dex::oracle {

inline Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return a + t * ab;
}

/// Plane projection with barycentric inside test, else nearest of the three
/// edge segments.
inline Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const Vec3 q = p - n * ((p - a).dot(n) / n.squaredNorm());
  const double area = n.squaredNorm();
  const double u = (c - b).cross(q - b).dot(n) / area;
  const double v = (a - c).cross(q - c).dot(n) / area;
  const double w = 1.0 - u - v;
  if (u >= 0 && v >= 0 && w >= 0) return q;
  Vec3 best = closest_on_segment(p, a, b);
  for (const Vec3& cand : {closest_on_segment(p, b, c), closest_on_segment(p, c, a)}) {
    if ((p - cand).squaredNorm() < (p - best).squaredNorm()) best = cand;
  }
  return best;
}

struct BruteHit {
  Vec3 point;
  double distance;
};

inline BruteHit closest_point(const TriMesh& m, const Vec3& p) {
  BruteHit best{Vec3::Zero(), std::numeric_limits<double>::infinity()};
  for (const auto& t : m.triangles()) {
    const Vec3 q = closest_on_triangle(p, m.vertices()[t[0]], m.vertices()[t[1]], m.vertices()[t[2]]);
    const double d = (p - q).norm();
    if (d < best.distance) best = {q, d};
  }
  return best;
}

/// Generalized winding number via summed solid angles.
inline double winding_number(const TriMesh& m, const Vec3& p) {
  double total = 0.0;
  for (const auto& t : m.triangles()) {
    const Vec3 a = m.vertices()[t[0]] - p;
    const Vec3 b = m.vertices()[t[1]] - p;
    const Vec3 c = m.vertices()[t[2]] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * std::numbers::pi);
}

inline double signed_distance(const TriMesh& m, const Vec3& p) {
  const double d = closest_point(m, p).distance;
  return winding_number(m, p) > 0.5 ? -d : d;
}

/// Random affine image of an icosphere: always a convex polytope.
inline TriMesh random_convex_polytope(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> sub(0, 2);
  const TriMesh base = make_icosphere(1.0, sub(rng));
  Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
  for (int i = 0; i < 3; ++i) a(i, i) = 0.3 + 0.7 * (u(rng) + 1.0) / 2.0;
  const Eigen::Quaterniond q = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized();
  a = q.toRotationMatrix() * a;
  const Vec3 shift(0.2 * u(rng), 0.2 * u(rng), 0.2 * u(rng));
  std::vector<Vec3> v;
  for (const auto& p : base.vertices()) v.push_back(a * p + shift);
  return TriMesh(std::move(v), base.triangles());
}

/// Star-shaped watertight mesh: icosphere with radially jittered vertices.
inline TriMesh random_star_mesh(std::mt19937_64& rng, int subdivisions = 2) {
  std::uniform_real_distribution<double> u(0.7, 1.3);
  const TriMesh base = make_icosphere(1.0, subdivisions);
  std::vector<Vec3> v;
  for (const auto& p : base.vertices()) v.push_back(p * u(rng));
  return TriMesh(std::move(v), base.triangles());
}

/// Unstructured soup of `count` random triangles in the unit box.
inline TriMesh random_soup(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> v;
  std::vector<Triangle> t;
  for (int i = 0; i < count; ++i) {
    const Vec3 c(u(rng), u(rng), u(rng));
    for (int k = 0; k < 3; ++k) v.push_back(c + 0.2 * Vec3(u(rng), u(rng), u(rng)));
    t.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  }
  return TriMesh(std::move(v), std::move(t));
}

inline Vec3 random_point(std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace dex::oracle
