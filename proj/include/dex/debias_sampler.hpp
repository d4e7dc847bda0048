#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "dex/geometry.hpp"
#include "dex/hand_model.hpp"

namespace dex {

constexpr double kAssociationHalfAngle = 20.0 * std::numbers::pi / 180.0;

/// FNV-1a over the little-endian bytes of the point coordinates.
std::uint64_t point_set_hash(const std::vector<Vec3>& points);

/// Palm-to-cloud association: among points inside the half-angle cone around
/// the heading, the one nearest along the ray; with an empty cone, the point
/// nearest to the ray. Ties go to the lower index.
int associate_point(const HandPose& pose, const HandModel& model, const PointCloud& cloud,
                    double half_angle = kAssociationHalfAngle);

struct ObjectStats {
  std::vector<Vec3> points;
  std::uint64_t point_hash = 0;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
};

/// Per-object association histograms over fixed point sets, with add-alpha
/// smoothing for sampling.
class DebiasStats {
 public:
  explicit DebiasStats(double alpha = 1.0);

  double alpha() const { return alpha_; }
  void add_object(const std::string& id, std::vector<Vec3> points);
  bool has_object(const std::string& id) const { return objects_.count(id) != 0; }
  const ObjectStats& object(const std::string& id) const;
  std::vector<std::string> object_ids() const;
  const std::map<std::string, ObjectStats>& objects() const { return objects_; }

  void record(const std::string& id, int point);

  /// {"alpha", "objects": {id: {"point_hash", "point_count", "counts", "total"}}}.
  /// Point coordinates are not stored; from_json takes them from `points`
  /// and rejects any set whose hash disagrees.
  nlohmann::json to_json() const;
  static DebiasStats from_json(const nlohmann::json& doc, const std::map<std::string, std::vector<Vec3>>& points);

 private:
  double alpha_;
  std::map<std::string, ObjectStats> objects_;
};

void update_stats(DebiasStats& stats, const std::string& id, int point);

/// Normalized 1 / (count + alpha). With alpha = 0, zero-count points share
/// all the mass.
std::vector<double> condition_probabilities(const DebiasStats& stats, const std::string& id);

/// n draws by inverse CDF on a 53-bit uniform from mt19937_64(seed).
std::vector<int> sample_conditions(const DebiasStats& stats, const std::string& id, int n, std::uint64_t seed);

/// Budgets proportional to 1 / (object_total + alpha), summing to n by
/// largest-remainder rounding. Equal remainders are ordered by a seeded
/// shuffle.
std::map<std::string, int> object_budget(const DebiasStats& stats, int n, std::uint64_t seed);

/// Total-variation distance between normalized counts and uniform.
double tv_to_uniform(const std::vector<std::int64_t>& counts);

}  // namespace dex
