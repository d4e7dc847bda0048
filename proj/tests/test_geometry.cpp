#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "dex/error.hpp"
#include "dex/geometry.hpp"
#include "dex/mesh_io.hpp"
#include "oracles.hpp"

using namespace dex;

namespace {

bool box_contains(const Box3& outer, const Box3& inner) {
  return outer.contains(inner.min()) && outer.contains(inner.max());
}

}  // namespace

TEST_CASE("build_bvh over a single triangle yields one leaf") {
  TriMesh tri({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
  const BvhTree tree = build_bvh(tri);
  CHECK(tree.nodes().size() == 1);
  CHECK(tree.leaf_count() == 1);
  CHECK(tree.nodes()[0].is_leaf());
}

TEST_CASE("build_bvh rejects an empty mesh") {
  TriMesh empty({}, {});
  CHECK_THROWS_AS(build_bvh(empty), Error);
  try {
    build_bvh(empty);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyMesh);
  }
}

TEST_CASE("mesh invariants are enforced at construction") {
  CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}}, {{0, 1, 2}}), Error);                       // index out of range
  CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}), Error);            // zero area
  CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}, {0, NAN, 0}}, {{0, 1, 2}}), Error);          // non-finite
  CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}, -1.0), Error);      // bad scale
  const TriMesh scaled({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}, 0.1);
  CHECK(scaled.vertices()[1].x() == doctest::Approx(0.1));
}

TEST_CASE("BVH of the unit cube: node boxes contain children, triangles in exactly one leaf") {
  const TriMesh cube = make_box(Vec3::Constant(0.5));
  CHECK(cube.triangle_count() == 12);
  CHECK(cube.is_watertight());
  const BvhTree tree = build_bvh(cube);
  std::vector<int> seen(cube.triangle_count(), 0);
  for (const auto& node : tree.nodes()) {
    if (node.is_leaf()) {
      for (int i = node.first; i < node.first + node.count; ++i) ++seen[tree.triangle_order()[i]];
      continue;
    }
    CHECK(box_contains(node.box, tree.nodes()[node.left].box));
    CHECK(box_contains(node.box, tree.nodes()[node.right].box));
  }
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("BVH closest point equals brute force on a 200-triangle soup") {
  std::mt19937_64 rng(7);
  const TriMesh soup = oracle::random_soup(rng, 200);
  const BvhTree tree = build_bvh(soup);
  for (int i = 0; i < 500; ++i) {
    const Vec3 q = oracle::random_point(rng, 1.5);
    const ClosestHit fast = tree.closest_point(soup, q);
    const oracle::BruteHit slow = oracle::closest_point(soup, q);
    CHECK(std::abs(std::sqrt(fast.distance_sq) - slow.distance) <= 1e-9);
    CHECK((fast.point - slow.point).norm() <= 1e-9);
  }
}

TEST_CASE("signed distance on the unit cube") {
  const IndexedMesh cube(make_box(Vec3::Constant(0.5)));
  CHECK(signed_distance(Vec3(2, 0, 0), cube).distance == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(signed_distance(Vec3(0, 0, 0), cube).distance == doctest::Approx(-0.5).epsilon(1e-12));
  // corner and edge regions exercise vertex and edge pseudonormals
  CHECK(signed_distance(Vec3(1, 1, 1), cube).distance == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
  CHECK(signed_distance(Vec3(0.45, 0.45, 0.45), cube).distance == doctest::Approx(-0.05).epsilon(1e-9));
  CHECK(signed_distance(Vec3(1, 1, 0), cube).distance == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  const SdfResult out = signed_distance(Vec3(2, 0, 0), cube);
  CHECK((out.gradient - Vec3::UnitX()).norm() < 1e-12);
  const SdfResult in = signed_distance(Vec3(0.3, 0, 0), cube);
  CHECK((in.gradient - Vec3::UnitX()).norm() < 1e-12);
}

TEST_CASE("signed distance matches the winding-number oracle on random watertight meshes") {
  std::mt19937_64 rng(11);
  for (int m = 0; m < 3; ++m) {
    const IndexedMesh mesh(oracle::random_star_mesh(rng));
    REQUIRE(mesh.mesh.is_watertight());
    for (int i = 0; i < 1000; ++i) {
      const Vec3 q = oracle::random_point(rng, 1.6);
      const double expected = oracle::signed_distance(mesh.mesh, q);
      CHECK(std::abs(signed_distance(q, mesh).distance - expected) <= 1e-6);
    }
  }
}

TEST_CASE("sign agrees with containment on random convex polytopes") {
  std::mt19937_64 rng(23);
  for (int m = 0; m < 10; ++m) {
    const IndexedMesh poly(oracle::random_convex_polytope(rng));
    for (int i = 0; i < 200; ++i) {
      const Vec3 q = oracle::random_point(rng, 1.2);
      const bool inside = oracle::winding_number(poly.mesh, q) > 0.5;
      const double d = signed_distance(q, poly).distance;
      if (std::abs(d) < 1e-12) continue;
      CHECK((d < 0) == inside);
    }
  }
}

TEST_CASE("distance gradient matches central finite differences away from the surface") {
  std::mt19937_64 rng(5);
  const IndexedMesh mesh(oracle::random_star_mesh(rng, 1));
  const double h = 1e-5;
  int checked = 0;
  while (checked < 200) {
    const Vec3 q = oracle::random_point(rng, 1.6);
    const SdfResult s = signed_distance(q, mesh);
    if (std::abs(s.distance) < 1e-3) continue;
    Vec3 fd;
    for (int k = 0; k < 3; ++k) {
      Vec3 dq = Vec3::Zero();
      dq[k] = h;
      fd[k] = (signed_distance(q + dq, mesh).distance - signed_distance(q - dq, mesh).distance) / (2 * h);
    }
    // the medial axis is a kink; skip samples where the closest feature jumps
    if (std::abs(fd.norm() - 1.0) > 1e-3) continue;
    CHECK((fd - s.gradient).norm() <= 1e-3);
    CHECK(std::abs(s.gradient.norm() - 1.0) <= 1e-6);
    ++checked;
  }
}

TEST_CASE("sphere_penetration examples and monotonicity") {
  const IndexedMesh cube(make_box(Vec3::Constant(0.5)));
  CHECK(sphere_penetration(Vec3(0.4, 0, 0), 0.2, cube) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(sphere_penetration(Vec3(10, 0, 0), 0.2, cube) == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> radius(0.01, 0.5);
  const IndexedMesh star(oracle::random_star_mesh(rng, 1));
  for (int i = 0; i < 300; ++i) {
    const Vec3 c = oracle::random_point(rng, 1.6);
    const double r = radius(rng);
    const double expected = std::max(r - oracle::signed_distance(star.mesh, c), 0.0);
    CHECK(std::abs(sphere_penetration(c, r, star) - expected) <= 1e-6);
    CHECK(sphere_penetration(c, r + 0.1, star) >= sphere_penetration(c, r, star));
  }
  // deeper centers penetrate more
  double previous = -1.0;
  for (double x = 1.0; x >= 0.0; x -= 0.05) {
    const double p = sphere_penetration(Vec3(x, 0, 0), 0.1, cube);
    CHECK(p >= previous);
    previous = p;
  }
}

TEST_CASE("sample_surface on the unit cube spreads evenly over the faces") {
  const TriMesh cube = make_box(Vec3::Constant(0.5));
  const PointCloud cloud = sample_surface(cube, 6000, 42);
  REQUIRE(cloud.size() == 6000);
  std::array<int, 6> per_face{};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& n = cloud.normals[i];
    int axis = 0;
    n.cwiseAbs().maxCoeff(&axis);
    ++per_face[2 * axis + (n[axis] > 0 ? 1 : 0)];
    CHECK(std::abs(std::abs(cloud.points[i][axis]) - 0.5) < 1e-12);
    CHECK(cloud.points[i].dot(n) > 0.0);
  }
  for (int c : per_face) CHECK(std::abs(c / 6000.0 - 1.0 / 6.0) <= 0.02);
}

TEST_CASE("sample_surface is deterministic per seed and rejects count 0") {
  const TriMesh sphere = make_icosphere(0.5, 2);
  const PointCloud a = sample_surface(sphere, 100, 9);
  const PointCloud b = sample_surface(sphere, 100, 9);
  CHECK(a.points == b.points);
  CHECK(a.normals == b.normals);
  CHECK(sample_surface(sphere, 100, 10).points != a.points);
  CHECK_THROWS_AS(sample_surface(sphere, 0, 1), Error);
}

TEST_CASE("sample_surface follows area weights on a skewed two-triangle mesh") {
  // areas 4.5 and 0.5 -> 9:1
  const TriMesh two({{0, 0, 0}, {3, 0, 0}, {0, 3, 0}, {10, 0, 0}, {11, 0, 0}, {10, 1, 0}}, {{0, 1, 2}, {3, 4, 5}});
  REQUIRE(two.face_area(0) / two.face_area(1) == doctest::Approx(9.0));
  const int n = 10000;
  const PointCloud cloud = sample_surface(two, n, 1);
  int big = 0;
  for (const auto& p : cloud.points) big += p.x() < 5.0 ? 1 : 0;
  // binomial sd at p = 0.9 is 0.003; 3% is a 10-sigma band
  CHECK(std::abs(static_cast<double>(big) / n - 0.9) <= 0.03);
}

TEST_CASE("mesh loaders: OBJ, ASCII STL and binary STL agree") {
  const auto dir = std::filesystem::temp_directory_path() / "dex_mesh_io_test";
  std::filesystem::create_directories(dir);
  const TriMesh cube = make_box(Vec3::Constant(0.5));
  save_obj(cube, dir / "cube.obj");
  const TriMesh obj = load_mesh(dir / "cube.obj", 2.0);
  CHECK(obj.triangle_count() == 12);
  CHECK(obj.bounds().max().x() == doctest::Approx(1.0));

  {
    std::ofstream out(dir / "cube.stl");
    out << "solid cube\n";
    for (const auto& t : cube.triangles()) {
      out << "facet normal 0 0 0\nouter loop\n";
      for (int v : t) {
        const Vec3& p = cube.vertices()[v];
        out << "vertex " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
      }
      out << "endloop\nendfacet\n";
    }
    out << "endsolid cube\n";
  }
  const TriMesh ascii = load_mesh(dir / "cube.stl");
  CHECK(ascii.vertices().size() == 8);
  CHECK(ascii.is_watertight());

  {
    std::ofstream out(dir / "cube_bin.stl", std::ios::binary);
    char header[80] = {};
    out.write(header, 80);
    const std::uint32_t count = 12;
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& t : cube.triangles()) {
      float buf[12] = {};
      for (int k = 0; k < 3; ++k) {
        for (int c = 0; c < 3; ++c) buf[3 + 3 * k + c] = static_cast<float>(cube.vertices()[t[k]][c]);
      }
      out.write(reinterpret_cast<const char*>(buf), 48);
      const std::uint16_t attr = 0;
      out.write(reinterpret_cast<const char*>(&attr), 2);
    }
  }
  const TriMesh binary = load_mesh(dir / "cube_bin.stl");
  CHECK(binary.vertices().size() == 8);
  const IndexedMesh im(binary);
  CHECK(signed_distance(Vec3(2, 0, 0), im).distance == doctest::Approx(1.5));

  CHECK_THROWS_AS(load_mesh(dir / "missing.obj"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("open meshes are accepted and flagged") {
  const TriMesh open({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
  CHECK_FALSE(open.is_watertight());
  const IndexedMesh m(open);
  CHECK(signed_distance(Vec3(0.2, 0.2, 1.0), m).distance == doctest::Approx(1.0));
  CHECK(signed_distance(Vec3(0.2, 0.2, -1.0), m).distance == doctest::Approx(-1.0));
}
