#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dex {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Box3 = Eigen::AlignedBox3d;
using Triangle = std::array<int, 3>;

/// Triangle soup with shared vertices. Immutable after construction; the
/// constructor applies `scale` to every vertex and validates the mesh.
class TriMesh {
 public:
  static constexpr double kMinTriangleArea = 1e-12;

  TriMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles, double scale = 1.0);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  std::size_t triangle_count() const { return triangles_.size(); }
  double scale() const { return scale_; }

  const Vec3& face_normal(std::size_t f) const { return face_normals_[f]; }
  double face_area(std::size_t f) const { return face_areas_[f]; }
  double total_area() const { return total_area_; }

  /// Angle-weighted pseudonormal of a vertex (unit length).
  const Vec3& vertex_pseudonormal(int v) const { return vertex_normals_[v]; }
  /// Pseudonormal of edge `local` (0: v0v1, 1: v1v2, 2: v2v0) of face `f`.
  const Vec3& edge_pseudonormal(std::size_t f, int local) const { return edge_normals_[3 * f + local]; }

  /// True when every edge is shared by exactly two faces.
  bool is_watertight() const { return watertight_; }

  const Box3& bounds() const { return bounds_; }
  /// Center of the axis-aligned bounds.
  Vec3 center() const { return bounds_.center(); }
  /// Max vertex distance from center().
  double bounding_radius() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  double scale_;
  std::vector<Vec3> face_normals_;
  std::vector<double> face_areas_;
  std::vector<Vec3> vertex_normals_;
  std::vector<Vec3> edge_normals_;
  double total_area_ = 0.0;
  bool watertight_ = true;
  Box3 bounds_;
};

/// Which feature of a triangle the closest point lies on.
enum class TriFeature : std::uint8_t { Face, Edge0, Edge1, Edge2, Vertex0, Vertex1, Vertex2 };

struct ClosestHit {
  Vec3 point = Vec3::Zero();
  double distance_sq = 0.0;
  int triangle = -1;
  TriFeature feature = TriFeature::Face;
};

/// Closest point on triangle (a, b, c) to p, with the Voronoi feature it lies on.
ClosestHit closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Binary AABB hierarchy over the triangles of one mesh. Holds no reference to
/// the mesh; queries take the mesh it was built from.
class BvhTree {
 public:
  struct Node {
    Box3 box;
    int left = -1;
    int right = -1;
    int first = 0;  // into triangle_order() when leaf
    int count = 0;  // > 0 iff leaf
    bool is_leaf() const { return count > 0; }
  };

  static constexpr int kLeafSize = 4;

  BvhTree() = default;
  explicit BvhTree(const TriMesh& mesh);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<int>& triangle_order() const { return order_; }
  std::size_t leaf_count() const;

  ClosestHit closest_point(const TriMesh& mesh, const Vec3& query) const;

 private:
  int build(const TriMesh& mesh, std::vector<Vec3>& centroids, int first, int count);

  std::vector<Node> nodes_;
  std::vector<int> order_;
};

/// Throws Error(EmptyMesh) for a mesh without triangles.
BvhTree build_bvh(const TriMesh& mesh);

/// Linear scan over all triangles; reference path for the BVH.
ClosestHit closest_point_brute_force(const TriMesh& mesh, const Vec3& query);

struct SdfResult {
  double distance = 0.0;          // negative inside
  Vec3 closest_point = Vec3::Zero();
  Vec3 gradient = Vec3::UnitX();  // direction of increasing distance
  Vec3 normal = Vec3::UnitX();    // outward pseudonormal at the closest feature
  int triangle = -1;
};

/// A mesh with its hierarchy, the unit every query in the engine works on.
struct IndexedMesh {
  explicit IndexedMesh(TriMesh m) : mesh(std::move(m)), tree(build_bvh(mesh)) {}
  TriMesh mesh;
  BvhTree tree;
};

SdfResult signed_distance(const Vec3& query, const TriMesh& mesh, const BvhTree& tree);
inline SdfResult signed_distance(const Vec3& query, const IndexedMesh& m) {
  return signed_distance(query, m.mesh, m.tree);
}

/// max(radius - sdf(center), 0).
double sphere_penetration(const Vec3& center, double radius, const TriMesh& mesh, const BvhTree& tree);
inline double sphere_penetration(const Vec3& center, double radius, const IndexedMesh& m) {
  return sphere_penetration(center, radius, m.mesh, m.tree);
}

struct PointCloud {
  PointCloud() = default;
  PointCloud(std::vector<Vec3> pts, std::vector<Vec3> nrm = {});

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return !normals.empty(); }

  std::vector<Vec3> points;
  std::vector<Vec3> normals;
};

/// Area-weighted uniform samples with face normals; deterministic per seed.
PointCloud sample_surface(const TriMesh& mesh, int count, std::uint64_t seed);

// Closed primitives with outward (counter-clockwise) winding.
TriMesh make_box(const Vec3& half_extents, const Vec3& center = Vec3::Zero());
TriMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());

}  // namespace dex
