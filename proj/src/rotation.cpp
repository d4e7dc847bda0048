#include "dex/rotation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace dex {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGimbalEps = 1e-9;

double wrap_near(double angle, double reference) {
  return angle + kTwoPi * std::round((reference - angle) / kTwoPi);
}

}  // namespace

Mat3 euler_xyz_to_matrix(const Vec3& e) {
  return (Eigen::AngleAxisd(e.x(), Vec3::UnitX()) * Eigen::AngleAxisd(e.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(e.z(), Vec3::UnitZ()))
      .toRotationMatrix();
}

// Remaining z angle once a and b are fixed: Rz(c) = Ry(b)^T Rx(a)^T R.
static double fit_z(const Mat3& r, double a, double b) {
  const Mat3 rest = (Eigen::AngleAxisd(a, Vec3::UnitX()) * Eigen::AngleAxisd(b, Vec3::UnitY())).toRotationMatrix().transpose() * r;
  return std::atan2(rest(1, 0), rest(0, 0));
}

Vec3 matrix_to_euler_xyz(const Mat3& r) {
  const double cb = std::hypot(r(0, 0), r(0, 1));
  const double b = std::atan2(r(0, 2), cb);
  // at gimbal lock only a + c (or c - a) is determined; take a = 0
  const double a = cb < kGimbalEps ? 0.0 : std::atan2(-r(1, 2), r(2, 2));
  return {a, b, fit_z(r, a, b)};
}

Vec3 nearest_euler_xyz(const Mat3& r, const Vec3& ref) {
  const Vec3 base = matrix_to_euler_xyz(r);
  if (std::hypot(r(0, 0), r(0, 1)) < kGimbalEps) {
    const double a = ref.x();
    const double b = wrap_near(base.y(), ref.y());
    return {a, b, wrap_near(fit_z(r, a, b), ref.z())};
  }
  const std::array<Vec3, 2> branches = {
      base, Vec3(base.x() + std::numbers::pi, std::numbers::pi - base.y(), base.z() + std::numbers::pi)};
  Vec3 best = base;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& cand : branches) {
    const Vec3 shifted(wrap_near(cand.x(), ref.x()), wrap_near(cand.y(), ref.y()), wrap_near(cand.z(), ref.z()));
    const double d = (shifted - ref).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = shifted;
    }
  }
  return best;
}

Mat3 euler_xyz_axes(const Vec3& e) {
  const Mat3 rx = Eigen::AngleAxisd(e.x(), Vec3::UnitX()).toRotationMatrix();
  const Mat3 ry = Eigen::AngleAxisd(e.y(), Vec3::UnitY()).toRotationMatrix();
  Mat3 axes;
  axes.col(0) = Vec3::UnitX();
  axes.col(1) = rx * Vec3::UnitY();
  axes.col(2) = rx * ry * Vec3::UnitZ();
  return axes;
}

Mat3 rpy_to_matrix(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 rotation_log(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  return Eigen::AngleAxisd(a.transpose() * b).angle();
}

bool is_rotation_matrix(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

Mat3 cross_matrix(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace dex
