#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dex/error.hpp"
#include "dex/metrics.hpp"
#include "dex/rotation.hpp"
#include "gradient_check.hpp"
#include "oracles.hpp"

using namespace dex;
using nlohmann::json;

namespace {

HandModel point_hand(const std::vector<Vec3>& candidates, const std::vector<std::pair<Vec3, double>>& spheres) {
  json cfg;
  json link = {{"name", "root"}, {"spheres", json::array()}, {"contact_candidates", json::array()}};
  for (const auto& c : candidates) link["contact_candidates"].push_back({c.x(), c.y(), c.z()});
  for (const auto& [c, r] : spheres) link["spheres"].push_back({{"center", {c.x(), c.y(), c.z()}}, {"radius", r}});
  cfg["links"] = {link};
  cfg["markers"] = {{"palm_center", {{"link", "root"}, {"point", {0, 0, 0}}}},
                    {"thumb_tip", {{"link", "root"}, {"point", {1, 0, 0}}}},
                    {"middle_tip", {{"link", "root"}, {"point", {1, 0.1, 0}}}}};
  return HandModel::from_json(cfg);
}

ContactSet antipodal_pairs(int pairs) {
  ContactSet c;
  const Vec3 axes[3] = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  for (int i = 0; i < pairs; ++i) {
    for (double s : {1.0, -1.0}) {
      c.points.push_back(s * axes[i]);
      c.normals.push_back(s * axes[i]);
      c.sources.push_back(static_cast<int>(c.sources.size()));
    }
  }
  return c;
}

// Edge wrenches rebuilt from the cone definition, support minimum over many
// random directions drawn with a different generator.
double dense_q1(const ContactSet& c, double mu, int edges, int directions) {
  std::vector<Wrench> prims;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3 n = c.normals[i];
    const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 t1 = n.cross(seed).normalized();
    const Vec3 t2 = n.cross(t1);
    for (int k = 0; k < edges; ++k) {
      const double phi = 2 * std::numbers::pi * k / edges;
      const Vec3 f = -n + mu * (std::cos(phi) * t1 + std::sin(phi) * t2);
      Wrench w;
      w << f, c.points[i].cross(f);
      prims.push_back(w);
    }
  }
  std::mt19937 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  double best = 1e300;
  for (int d = 0; d < directions; ++d) {
    Wrench u;
    for (int k = 0; k < 6; ++k) u[k] = g(rng);
    u.normalize();
    double h = -1e300;
    for (const auto& w : prims) h = std::max(h, u.dot(w));
    best = std::min(best, h);
  }
  return std::max(best, 0.0);
}

}  // namespace

TEST_CASE("detect contacts") {
  const Scene cube = Scene::single(make_box(Vec3::Constant(0.5)));
  const HandModel hand = point_hand({Vec3(0.505, 0, 0), Vec3(0, 0.52, 0), Vec3(0, 0, -0.499)}, {{Vec3(0, 0, 5), 0.1}});
  HandPose pose(0);
  const ContactSet c = detect_contacts(pose, hand, cube.target_mesh(), 0.01);
  REQUIRE(c.size() == 2);
  CHECK(c.sources == std::vector<int>{0, 2});
  CHECK((c.points[0] - Vec3(0.5, 0, 0)).norm() < 1e-12);
  CHECK((c.normals[0] - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK((c.normals[1] - Vec3(0, 0, -1)).norm() < 1e-12);

  pose.translation = Vec3(3, 0, 0);
  CHECK(detect_contacts(pose, hand, cube.target_mesh()).empty());

  // brute-force distance scan on random toy-hand poses
  const HandModel toy = load_toy_hand();
  std::mt19937_64 rng(3);
  const TriMesh sphere = make_icosphere(0.5, 2);
  const IndexedMesh indexed(sphere);
  for (int trial = 0; trial < 100; ++trial) {
    const HandPose p = testing::random_toy_pose(toy, rng);
    const HandPlacement pl = forward_kinematics(toy, p);
    std::vector<int> expected;
    for (std::size_t i = 0; i < pl.candidates.size(); ++i) {
      if (oracle::closest_point(sphere, pl.candidates[i]).distance <= 0.05) expected.push_back(static_cast<int>(i));
    }
    CHECK(detect_contacts(p, toy, indexed, 0.05).sources == expected);
  }
}

TEST_CASE("q1 degenerate inputs are zero") {
  CHECK(q1_estimate(ContactSet{}, 0.5, 8, 4096, 0) == 0.0);
  ContactSet single{{Vec3(1, 0, 0)}, {Vec3(1, 0, 0)}, {0}};
  CHECK(q1_estimate(single, 0.5, 8, 4096, 0) == 0.0);
  // one antipodal pair cannot resist torque about the line through it
  CHECK(q1_estimate(antipodal_pairs(1), 1.0, 8, 4096, 0) == 0.0);
  CHECK_THROWS_AS(q1_estimate(single, 0.0, 8, 4096, 0), Error);
}

TEST_CASE("q1 of three antipodal pairs is close to a dense direction oracle") {
  const ContactSet c = antipodal_pairs(3);
  const double estimate = q1_estimate(c, 1.0, 8, 4096, 0);
  const double dense = dense_q1(c, 1.0, 8, 100000);
  CHECK(estimate > 0.0);
  CHECK(estimate >= dense - 1e-12 * dense);  // both are minima over samples of the same support function
  CHECK(std::abs(estimate - dense) <= 0.1 * dense);
}

TEST_CASE("q1 invariances and monotonicity") {
  const ContactSet c = antipodal_pairs(3);
  const double base = q1_estimate(c, 0.5, 8, 4096, 1);
  REQUIRE(base > 0.0);

  ContactSet permuted = c;
  std::reverse(permuted.points.begin(), permuted.points.end());
  std::reverse(permuted.normals.begin(), permuted.normals.end());
  CHECK(q1_estimate(permuted, 0.5, 8, 4096, 1) == doctest::Approx(base).epsilon(1e-12));

  // the fixed friction pyramid and sampled directions make this approximate
  const Mat3 r = euler_xyz_to_matrix(Vec3(0.4, -0.3, 1.1));
  ContactSet rotated = c;
  for (auto& p : rotated.points) p = r * p;
  for (auto& n : rotated.normals) n = r * n;
  CHECK(q1_estimate(rotated, 0.5, 8, 4096, 1) == doctest::Approx(base).epsilon(0.15));

  double prev = q1_estimate(c, 0.5, 8, 64, 1);
  for (int n : {256, 1024, 4096, 16384}) {
    const double q = q1_estimate(c, 0.5, 8, n, 1);
    CHECK(q <= prev);
    prev = q;
  }
  double last = 0.0;
  for (double mu : {0.2, 0.5, 1.0, 2.0}) {
    const double q = q1_estimate(c, mu, 8, 4096, 1);
    CHECK(q >= last);
    last = q;
  }
}

TEST_CASE("max penetration") {
  const Scene cube = Scene::single(make_box(Vec3::Constant(0.5)));
  const HandModel far = point_hand({}, {{Vec3(3, 0, 0), 0.2}});
  CHECK(max_penetration(HandPose(0), far, cube.target_mesh()) == 0.0);
  const HandModel inside = point_hand({}, {{Vec3(0.4, 0, 0), 0.2}, {Vec3(0.0, 0.45, 0), 0.01}});
  CHECK(max_penetration(HandPose(0), inside, cube.target_mesh()) == doctest::Approx(0.3).epsilon(1e-12));

  const HandModel toy = load_toy_hand();
  std::mt19937_64 rng(4);
  const TriMesh star = oracle::random_star_mesh(rng);
  const Scene scene = Scene::single(star);
  std::vector<double> radii;
  for (const auto& s : toy.spheres()) radii.push_back(s.radius);
  for (int trial = 0; trial < 50; ++trial) {
    const HandPose p = testing::random_toy_pose(toy, rng);
    const HandPlacement pl = forward_kinematics(toy, p);
    double expected = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      expected = std::max(expected, radii[i] - oracle::signed_distance(star, pl.sphere_centers[i]));
    }
    const double got = max_penetration(p, toy, scene.target_mesh());
    CHECK(std::abs(got - expected) < 1e-6);
    const double energy = penetration_energy(pl.sphere_centers, radii, scene.meshes).value;
    CHECK((got == 0.0) == (energy == 0.0));
  }
}

TEST_CASE("joint entropy") {
  const HandModel hand = load_toy_hand();
  std::vector<HandPose> same(50, hand.mid_range_pose());
  const EntropyResult zero = joint_entropy(same, hand);
  CHECK(zero.per_joint.norm() == 0.0);
  CHECK(zero.h_mean == 0.0);

  // one pose per bin centre
  std::vector<HandPose> uniform;
  for (int b = 0; b < 10000; ++b) {
    HandPose p(hand.dof());
    for (int j = 0; j < hand.dof(); ++j) {
      const auto& jt = hand.joints()[j];
      p.joints[j] = jt.lower + (b + 0.5) / 10000.0 * (jt.upper - jt.lower);
    }
    uniform.push_back(p);
  }
  const EntropyResult full = joint_entropy(uniform, hand);
  for (int j = 0; j < hand.dof(); ++j) CHECK(std::abs(full.per_joint[j] - std::log(10000.0)) <= 1e-9);
  CHECK(full.h_std < 1e-12);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.6, 1.2);
  std::vector<HandPose> random;
  for (int i = 0; i < 3000; ++i) {
    HandPose p(hand.dof());
    for (int j = 0; j < hand.dof(); ++j) p.joints[j] = u(rng);
    random.push_back(p);
  }
  const int bins = 37;
  const EntropyResult r = joint_entropy(random, hand, bins);
  for (int j = 0; j < hand.dof(); ++j) {
    std::vector<double> counts(bins, 0.0);
    const double lo = hand.joints()[j].lower, hi = hand.joints()[j].upper;
    for (const auto& p : random) {
      int b = static_cast<int>(std::floor((p.joints[j] - lo) / (hi - lo) * bins));
      counts[std::clamp(b, 0, bins - 1)] += 1.0;
    }
    double h = 0.0;
    for (double c : counts)
      if (c > 0) h -= c / 3000.0 * std::log(c / 3000.0);
    CHECK(std::abs(r.per_joint[j] - h) < 1e-12);
    CHECK(r.per_joint[j] <= std::log(bins) + 1e-12);
  }
  std::reverse(random.begin(), random.end());
  CHECK((joint_entropy(random, hand, bins).per_joint - r.per_joint).norm() < 1e-12);

  CHECK_THROWS_AS(joint_entropy(std::vector<HandPose>{}, hand), Error);
  CHECK_THROWS_AS(joint_entropy(same, hand, 1), Error);
}

TEST_CASE("evaluate_pose feasibility proxy") {
  const Scene cube = Scene::single(make_box(Vec3::Constant(0.5)));
  const HandModel hand = point_hand({Vec3(0.5, 0, 0), Vec3(-0.5, 0, 0)}, {{Vec3(0.5 + 0.05, 0, 0), 0.05}});
  MetricReport m = evaluate_pose(HandPose(0), hand, cube);
  CHECK(m.contact_count == 2);
  CHECK(m.max_penetration == 0.0);
  CHECK(m.feasible);
  CHECK(m.q1 == 0.0);

  HandPose shifted(0);
  shifted.translation = Vec3(-0.01, 0, 0);
  m = evaluate_pose(shifted, hand, cube);
  CHECK(m.max_penetration == doctest::Approx(0.01));
  CHECK_FALSE(m.feasible);
}
