#include "dex/debias_sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

#include "dex/error.hpp"
#include "dex/hash.hpp"

namespace dex {

namespace {

double uniform53(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t point_set_hash(const std::vector<Vec3>& points) {
  std::uint64_t h = kFnvOffset;
  for (const auto& p : points) {
    for (int k = 0; k < 3; ++k) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(p[k]);
      char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      h = fnv1a(std::string_view(bytes, 8), h);
    }
  }
  return h;
}

int associate_point(const HandPose& pose, const HandModel& model, const PointCloud& cloud, double half_angle) {
  if (cloud.size() == 0) throw Error(ErrorCode::InvalidArgument, "association cloud is empty");
  const HandPlacement pl = forward_kinematics(model, pose);
  const Vec3 ray = 0.5 * (pl.thumb_tip + pl.middle_tip) - pl.palm_center;
  if (!(ray.norm() > 1e-12)) throw Error(ErrorCode::DegenerateGeometry, "heading direction is degenerate");
  const Vec3 h = ray.normalized();
  const double cos_cone = std::cos(half_angle);

  int in_cone = -1, near_ray = -1;
  double best_t = std::numeric_limits<double>::infinity();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 v = cloud.points[i] - pl.palm_center;
    const double t = v.dot(h);
    const double len = v.norm();
    if (t >= cos_cone * len && t < best_t) {
      best_t = t;
      in_cone = static_cast<int>(i);
    }
    const double d = t > 0.0 ? (v - t * h).norm() : len;
    if (d < best_d) {
      best_d = d;
      near_ray = static_cast<int>(i);
    }
  }
  return in_cone >= 0 ? in_cone : near_ray;
}

DebiasStats::DebiasStats(double alpha) : alpha_(alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "alpha must be finite and >= 0");
}

void DebiasStats::add_object(const std::string& id, std::vector<Vec3> points) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "object '" + id + "' has no association points");
  if (has_object(id)) throw Error(ErrorCode::InvalidArgument, "object '" + id + "' already has stats");
  ObjectStats s;
  s.point_hash = point_set_hash(points);
  s.counts.assign(points.size(), 0);
  s.points = std::move(points);
  objects_.emplace(id, std::move(s));
}

const ObjectStats& DebiasStats::object(const std::string& id) const {
  const auto it = objects_.find(id);
  if (it == objects_.end()) throw Error(ErrorCode::UnknownObject, "unknown object '" + id + "'");
  return it->second;
}

std::vector<std::string> DebiasStats::object_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, s] : objects_) ids.push_back(id);
  return ids;
}

void DebiasStats::record(const std::string& id, int point) {
  const auto it = objects_.find(id);
  if (it == objects_.end()) throw Error(ErrorCode::UnknownObject, "unknown object '" + id + "'");
  ObjectStats& s = it->second;
  if (point < 0 || point >= static_cast<int>(s.counts.size())) {
    throw Error(ErrorCode::InvalidArgument, "point index " + std::to_string(point) + " out of range for '" + id + "'");
  }
  ++s.counts[point];
  ++s.total;
}

nlohmann::json DebiasStats::to_json() const {
  nlohmann::json objs = nlohmann::json::object();
  for (const auto& [id, s] : objects_) {
    objs[id] = {{"point_hash", hex64(s.point_hash)},
                {"point_count", s.points.size()},
                {"counts", s.counts},
                {"total", s.total}};
  }
  return {{"alpha", alpha_}, {"objects", objs}};
}

DebiasStats DebiasStats::from_json(const nlohmann::json& doc,
                                   const std::map<std::string, std::vector<Vec3>>& points) {
  try {
    DebiasStats out(doc.at("alpha").get<double>());
    for (const auto& [id, o] : doc.at("objects").items()) {
      const auto it = points.find(id);
      if (it == points.end()) throw Error(ErrorCode::UnknownObject, "no association points for object '" + id + "'");
      out.add_object(id, it->second);
      ObjectStats& s = out.objects_.at(id);
      if (o.at("point_hash").get<std::string>() != hex64(s.point_hash)) {
        throw Error(ErrorCode::ChecksumMismatch, "association point set for '" + id + "' does not match the stats");
      }
      const auto counts = o.at("counts").get<std::vector<std::int64_t>>();
      if (counts.size() != s.counts.size()) {
        throw Error(ErrorCode::DimensionMismatch, "count array for '" + id + "' has the wrong length");
      }
      std::int64_t total = 0;
      for (auto c : counts) {
        if (c < 0) throw Error(ErrorCode::FormatError, "negative count for '" + id + "'");
        total += c;
      }
      if (total != o.at("total").get<std::int64_t>()) {
        throw Error(ErrorCode::FormatError, "count total for '" + id + "' does not match its counts");
      }
      s.counts = counts;
      s.total = total;
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed debias stats: ") + e.what());
  }
}

void update_stats(DebiasStats& stats, const std::string& id, int point) { stats.record(id, point); }

std::vector<double> condition_probabilities(const DebiasStats& stats, const std::string& id) {
  const ObjectStats& s = stats.object(id);
  const std::size_t m = s.counts.size();
  std::vector<double> p(m, 0.0);
  const bool has_zero = std::find(s.counts.begin(), s.counts.end(), 0) != s.counts.end();
  if (stats.alpha() == 0.0 && has_zero) {
    for (std::size_t i = 0; i < m; ++i) p[i] = s.counts[i] == 0 ? 1.0 : 0.0;
  } else {
    for (std::size_t i = 0; i < m; ++i) p[i] = 1.0 / (static_cast<double>(s.counts[i]) + stats.alpha());
  }
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= sum;
  return p;
}

std::vector<int> sample_conditions(const DebiasStats& stats, const std::string& id, int n, std::uint64_t seed) {
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  const std::vector<double> p = condition_probabilities(stats, id);
  std::vector<double> cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  cdf.back() = 1.0;
  std::mt19937_64 rng(seed);
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) {
    const double u = uniform53(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    out[i] = static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
  }
  return out;
}

std::map<std::string, int> object_budget(const DebiasStats& stats, int n, std::uint64_t seed) {
  if (stats.objects().empty()) throw Error(ErrorCode::InvalidArgument, "budget needs at least one object");
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "budget total must be nonnegative");
  const std::vector<std::string> ids = stats.object_ids();
  const std::size_t k = ids.size();
  std::vector<double> w(k);
  bool any_zero = false;
  for (std::size_t i = 0; i < k; ++i) any_zero |= stats.object(ids[i]).total == 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double t = static_cast<double>(stats.object(ids[i]).total);
    w[i] = (stats.alpha() == 0.0 && any_zero) ? (t == 0.0 ? 1.0 : 0.0) : 1.0 / (t + stats.alpha());
  }
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);

  std::vector<int> base(k);
  std::vector<double> rem(k);
  int assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = n * w[i] / sum;
    base[i] = static_cast<int>(std::floor(exact));
    rem[i] = exact - base[i];
    assigned += base[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = k; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (int i = 0; assigned < n; ++i, ++assigned) ++base[order[i % k]];

  std::map<std::string, int> out;
  for (std::size_t i = 0; i < k; ++i) out[ids[i]] = base[i];
  return out;
}

double tv_to_uniform(const std::vector<std::int64_t>& counts) {
  if (counts.empty()) throw Error(ErrorCode::InvalidArgument, "tv distance needs a nonempty histogram");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}));
  const double u = 1.0 / counts.size();
  if (total == 0.0) return 0.0;
  double tv = 0.0;
  for (auto c : counts) tv += std::abs(c / total - u);
  return 0.5 * tv;
}

}  // namespace dex
