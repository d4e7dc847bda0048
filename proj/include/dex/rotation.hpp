#pragma once

#include <array>

#include "dex/geometry.hpp"

namespace dex {

/// Rx(e.x) * Ry(e.y) * Rz(e.z): intrinsic x-y-z Euler angles.
Mat3 euler_xyz_to_matrix(const Vec3& euler);

/// Principal decomposition, y-angle in [-pi/2, pi/2]. At gimbal lock the
/// z-angle is set to zero.
Vec3 matrix_to_euler_xyz(const Mat3& rotation);

/// The Euler triple for `rotation` nearest to `reference` over both branches
/// and all 2*pi shifts. At gimbal lock the free angle follows the reference.
Vec3 nearest_euler_xyz(const Mat3& rotation, const Vec3& reference);

/// World-frame rotation axes of the three intrinsic angles; column k of the
/// returned matrix is the axis angle k spins about.
Mat3 euler_xyz_axes(const Vec3& euler);

/// URDF-style fixed-axis roll/pitch/yaw: Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rpy_to_matrix(const Vec3& rpy);

/// Axis-angle vector of a rotation matrix (log map), angle in [0, pi].
Vec3 rotation_log(const Mat3& rotation);

/// Geodesic angle between two rotations.
double rotation_angle_between(const Mat3& a, const Mat3& b);

/// Orthonormal with det +1 within tol.
bool is_rotation_matrix(const Mat3& m, double tol = 1e-6);

Mat3 cross_matrix(const Vec3& v);

}  // namespace dex
