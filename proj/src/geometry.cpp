#include "dex/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>

#include "dex/error.hpp"

namespace dex {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

double corner_angle(const Vec3& at, const Vec3& p, const Vec3& q) {
  const Vec3 u = (p - at).normalized();
  const Vec3 v = (q - at).normalized();
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

}  // namespace

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles, double scale)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), scale_(scale) {
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
    throw Error(ErrorCode::InvalidMesh, "mesh scale must be positive and finite");
  }
  for (auto& v : vertices_) {
    if (!v.allFinite()) throw Error(ErrorCode::InvalidMesh, "mesh vertex is not finite");
    v *= scale_;
    bounds_.extend(v);
  }
  const int nv = static_cast<int>(vertices_.size());
  const std::size_t nf = triangles_.size();
  face_normals_.resize(nf);
  face_areas_.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& t = triangles_[f];
    for (int idx : t) {
      if (idx < 0 || idx >= nv) {
        throw Error(ErrorCode::InvalidMesh,
                    "triangle " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                        " out of range");
      }
    }
    const Vec3 n = (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]);
    const double area = 0.5 * n.norm();
    if (!(area > kMinTriangleArea)) {
      throw Error(ErrorCode::InvalidMesh, "triangle " + std::to_string(f) + " has zero area");
    }
    face_areas_[f] = area;
    face_normals_[f] = n / (2.0 * area);
    total_area_ += area;
  }

  vertex_normals_.assign(vertices_.size(), Vec3::Zero());
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> edge_faces;
  edge_faces.reserve(nf * 3);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& t = triangles_[f];
    for (int k = 0; k < 3; ++k) {
      const int a = t[k];
      const int b = t[(k + 1) % 3];
      const int c = t[(k + 2) % 3];
      vertex_normals_[a] += corner_angle(vertices_[a], vertices_[b], vertices_[c]) * face_normals_[f];
      edge_faces[edge_key(a, b)].push_back(f);
    }
  }
  for (auto& n : vertex_normals_) {
    const double len = n.norm();
    if (len > 0.0) n /= len;
  }

  edge_normals_.resize(3 * nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& t = triangles_[f];
    for (int k = 0; k < 3; ++k) {
      const auto& faces = edge_faces[edge_key(t[k], t[(k + 1) % 3])];
      if (faces.size() != 2) watertight_ = false;
      Vec3 n = Vec3::Zero();
      for (std::size_t g : faces) n += face_normals_[g];
      const double len = n.norm();
      edge_normals_[3 * f + k] = len > 0.0 ? Vec3(n / len) : face_normals_[f];
    }
  }
}

double TriMesh::bounding_radius() const {
  const Vec3 c = center();
  double r = 0.0;
  for (const auto& v : vertices_) r = std::max(r, (v - c).norm());
  return r;
}

ClosestHit closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  ClosestHit hit;
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  auto finish = [&](const Vec3& q, TriFeature f) {
    hit.point = q;
    hit.feature = f;
    hit.distance_sq = (p - q).squaredNorm();
    return hit;
  };
  if (d1 <= 0.0 && d2 <= 0.0) return finish(a, TriFeature::Vertex0);

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return finish(b, TriFeature::Vertex1);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return finish(a + v * ab, TriFeature::Edge0);
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return finish(c, TriFeature::Vertex2);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return finish(a + w * ac, TriFeature::Edge2);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return finish(b + w * (c - b), TriFeature::Edge1);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return finish(a + ab * v + ac * w, TriFeature::Face);
}

BvhTree::BvhTree(const TriMesh& mesh) {
  const int n = static_cast<int>(mesh.triangle_count());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  std::vector<Vec3> centroids(n);
  for (int f = 0; f < n; ++f) {
    const auto& t = mesh.triangles()[f];
    centroids[f] = (mesh.vertices()[t[0]] + mesh.vertices()[t[1]] + mesh.vertices()[t[2]]) / 3.0;
  }
  nodes_.reserve(2 * (n / kLeafSize + 1));
  build(mesh, centroids, 0, n);
}

int BvhTree::build(const TriMesh& mesh, std::vector<Vec3>& centroids, int first, int count) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Box3 box;
  Box3 centroid_box;
  for (int i = first; i < first + count; ++i) {
    const auto& t = mesh.triangles()[order_[i]];
    for (int v : t) box.extend(mesh.vertices()[v]);
    centroid_box.extend(centroids[order_[i]]);
  }
  nodes_[index].box = box;

  if (count <= kLeafSize) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }

  int axis = 0;
  centroid_box.sizes().maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });
  const int left = build(mesh, centroids, first, mid - first);
  const int right = build(mesh, centroids, mid, first + count - mid);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

std::size_t BvhTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

ClosestHit BvhTree::closest_point(const TriMesh& mesh, const Vec3& query) const {
  ClosestHit best;
  best.distance_sq = std::numeric_limits<double>::infinity();
  if (nodes_.empty()) return best;

  int stack[64];
  int top = 0;
  stack[top++] = 0;
  const auto& verts = mesh.vertices();
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.box.squaredExteriorDistance(query) > best.distance_sq) continue;
    if (node.is_leaf()) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const int f = order_[i];
        const auto& t = mesh.triangles()[f];
        ClosestHit hit = closest_point_on_triangle(query, verts[t[0]], verts[t[1]], verts[t[2]]);
        if (hit.distance_sq < best.distance_sq) {
          hit.triangle = f;
          best = hit;
        }
      }
      continue;
    }
    const double dl = nodes_[node.left].box.squaredExteriorDistance(query);
    const double dr = nodes_[node.right].box.squaredExteriorDistance(query);
    // push the farther child first so the nearer one is popped next
    if (dl < dr) {
      if (dr <= best.distance_sq) stack[top++] = node.right;
      if (dl <= best.distance_sq) stack[top++] = node.left;
    } else {
      if (dl <= best.distance_sq) stack[top++] = node.left;
      if (dr <= best.distance_sq) stack[top++] = node.right;
    }
  }
  return best;
}

BvhTree build_bvh(const TriMesh& mesh) {
  if (mesh.triangle_count() == 0) throw Error(ErrorCode::EmptyMesh, "cannot build a BVH over an empty mesh");
  return BvhTree(mesh);
}

ClosestHit closest_point_brute_force(const TriMesh& mesh, const Vec3& query) {
  ClosestHit best;
  best.distance_sq = std::numeric_limits<double>::infinity();
  const auto& verts = mesh.vertices();
  for (std::size_t f = 0; f < mesh.triangle_count(); ++f) {
    const auto& t = mesh.triangles()[f];
    ClosestHit hit = closest_point_on_triangle(query, verts[t[0]], verts[t[1]], verts[t[2]]);
    if (hit.distance_sq < best.distance_sq) {
      hit.triangle = static_cast<int>(f);
      best = hit;
    }
  }
  return best;
}

namespace {

Vec3 feature_pseudonormal(const TriMesh& mesh, const ClosestHit& hit) {
  const auto& t = mesh.triangles()[hit.triangle];
  switch (hit.feature) {
    case TriFeature::Face: return mesh.face_normal(hit.triangle);
    case TriFeature::Edge0: return mesh.edge_pseudonormal(hit.triangle, 0);
    case TriFeature::Edge1: return mesh.edge_pseudonormal(hit.triangle, 1);
    case TriFeature::Edge2: return mesh.edge_pseudonormal(hit.triangle, 2);
    case TriFeature::Vertex0: return mesh.vertex_pseudonormal(t[0]);
    case TriFeature::Vertex1: return mesh.vertex_pseudonormal(t[1]);
    case TriFeature::Vertex2: return mesh.vertex_pseudonormal(t[2]);
  }
  return mesh.face_normal(hit.triangle);
}

}  // namespace

SdfResult signed_distance(const Vec3& query, const TriMesh& mesh, const BvhTree& tree) {
  const ClosestHit hit = tree.closest_point(mesh, query);
  SdfResult out;
  out.closest_point = hit.point;
  out.triangle = hit.triangle;
  out.normal = feature_pseudonormal(mesh, hit);
  const Vec3 diff = query - hit.point;
  const double dist = std::sqrt(hit.distance_sq);
  const bool inside = diff.dot(out.normal) < 0.0;
  out.distance = inside ? -dist : dist;
  if (dist > 0.0) {
    out.gradient = inside ? Vec3(-diff / dist) : Vec3(diff / dist);
  } else {
    out.gradient = out.normal;
  }
  return out;
}

double sphere_penetration(const Vec3& center, double radius, const TriMesh& mesh, const BvhTree& tree) {
  return std::max(radius - signed_distance(center, mesh, tree).distance, 0.0);
}

PointCloud::PointCloud(std::vector<Vec3> pts, std::vector<Vec3> nrm)
    : points(std::move(pts)), normals(std::move(nrm)) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "point cloud must not be empty");
  if (!normals.empty()) {
    if (normals.size() != points.size()) {
      throw Error(ErrorCode::DimensionMismatch, "point cloud normal count differs from point count");
    }
    for (const auto& n : normals) {
      if (std::abs(n.norm() - 1.0) > 1e-6) throw Error(ErrorCode::InvalidArgument, "point cloud normal is not unit length");
    }
  }
}

PointCloud sample_surface(const TriMesh& mesh, int count, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be at least 1");
  if (mesh.triangle_count() == 0) throw Error(ErrorCode::EmptyMesh, "cannot sample an empty mesh");
  std::vector<double> areas(mesh.triangle_count());
  for (std::size_t f = 0; f < areas.size(); ++f) areas[f] = mesh.face_area(f);
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick_face(areas.begin(), areas.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  points.reserve(count);
  normals.reserve(count);
  const auto& verts = mesh.vertices();
  for (int i = 0; i < count; ++i) {
    const std::size_t f = pick_face(rng);
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    const auto& t = mesh.triangles()[f];
    points.push_back((1.0 - r1) * verts[t[0]] + r1 * (1.0 - r2) * verts[t[1]] + r1 * r2 * verts[t[2]]);
    normals.push_back(mesh.face_normal(f));
  }
  return PointCloud(std::move(points), std::move(normals));
}

TriMesh make_box(const Vec3& h, const Vec3& center) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) {
    v.emplace_back(center.x() + ((i & 1) ? h.x() : -h.x()), center.y() + ((i & 2) ? h.y() : -h.y()),
                   center.z() + ((i & 4) ? h.z() : -h.z()));
  }
  std::vector<Triangle> t = {
      {0, 2, 1}, {1, 2, 3},  // -z
      {4, 5, 6}, {5, 7, 6},  // +z
      {0, 1, 4}, {1, 5, 4},  // -y
      {2, 6, 3}, {3, 6, 7},  // +y
      {0, 4, 2}, {2, 4, 6},  // -x
      {1, 3, 5}, {3, 7, 5},  // +x
  };
  return TriMesh(std::move(v), std::move(t));
}

TriMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                         {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                         {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<Triangle> t = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<Triangle> next;
    next.reserve(t.size() * 4);
    for (const auto& f : t) {
      const int ab = midpoint(f[0], f[1]);
      const int bc = midpoint(f[1], f[2]);
      const int ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    t = std::move(next);
  }
  for (auto& p : v) p = center + radius * p;
  return TriMesh(std::move(v), std::move(t));
}

}  // namespace dex
