#pragma once

// Rotation representations and conversions.
//
// Euler angles are extrinsic XYZ: rotate about world X, then world Y, then
// world Z, i.e. R = Rz * Ry * Rx. Cameras and lights look along their local -Z
// with local +Y up.

#include <variant>

#include "scirender/math.hpp"

namespace scirender {

struct AxisAngle {
    Vec3 axis{0, 0, 1};
    double angle = 0;  // radians
};

struct EulerXYZ {
    double rx = 0, ry = 0, rz = 0;  // radians
};

using RotationSpec = std::variant<Quat, AxisAngle, Mat3, EulerXYZ>;

/// Converts any rotation representation to a unit quaternion with w >= 0.
/// Throws Error(invalid_rotation) for zero axes, zero quaternions and matrices
/// whose Frobenius deviation from orthonormality exceeds 1e-4 or det < 0.
Quat to_quaternion(const RotationSpec& spec);

/// Flips the sign so that w >= 0 (ties on w == 0 resolved by the first nonzero
/// of x, y, z being positive) and renormalizes.
Quat canonicalize(Quat q);

Quat quat_from_matrix(const Mat3& m);
AxisAngle to_axis_angle(const Quat& q);
EulerXYZ to_euler_xyz(const Quat& q);

/// Rotation angle in [0, pi] between two orientations.
double angle_between(const Quat& a, const Quat& b);

/// Frame whose columns are camera right, up and backward (-forward) axes.
Mat3 look_at_frame(const Vec3& eye, const Vec3& target, const Vec3* up_hint = nullptr);

/// Rotation mapping camera-local X, Y, Z to (right, up, -forward).
/// Without a hint, world +Z is used as up unless the view direction is
/// (anti)parallel to it within 1e-6, in which case world +Y is used.
Quat look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3* up_hint = nullptr);

/// Shortest-arc spherical interpolation with constant angular velocity.
Quat slerp(const Quat& a, const Quat& b, double t);

}  // namespace scirender
