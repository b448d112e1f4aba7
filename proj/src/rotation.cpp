#include "scirender/rotation.hpp"

#include <cmath>

#include "scirender/error.hpp"

namespace scirender {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::invalid_rotation: return "invalid-rotation";
        case ErrorCode::degenerate_look_at: return "degenerate-look-at";
        case ErrorCode::tag_collision: return "tag-collision";
        case ErrorCode::not_found: return "not-found";
        case ErrorCode::missing_camera: return "missing-camera";
        case ErrorCode::invalid_primitive: return "invalid-primitive";
        case ErrorCode::invalid_geometry: return "invalid-geometry";
        case ErrorCode::bind_error: return "bind-error";
        case ErrorCode::invalid_image: return "invalid-image";
        case ErrorCode::bounds_error: return "bounds-error";
        case ErrorCode::io_error: return "io-error";
        case ErrorCode::parse_error: return "parse-error";
        case ErrorCode::schema_error: return "schema-error";
        case ErrorCode::unsupported: return "unsupported";
        case ErrorCode::insufficient_points: return "insufficient-points";
        case ErrorCode::duplicate_keypoint: return "duplicate-keypoint";
        case ErrorCode::empty_trajectory: return "empty-trajectory";
        case ErrorCode::empty_reconstruction: return "empty-reconstruction";
        case ErrorCode::invalid_target: return "invalid-target";
        case ErrorCode::atlas_capacity: return "atlas-capacity";
        case ErrorCode::empty_bake: return "empty-bake";
    }
    return "unknown";
}

Quat canonicalize(Quat q) {
    const double n = q.norm();
    q = {q.w / n, q.x / n, q.y / n, q.z / n};
    bool flip = q.w < 0;
    if (q.w == 0) {
        const double first = q.x != 0 ? q.x : (q.y != 0 ? q.y : q.z);
        flip = first < 0;
    }
    return flip ? -q : q;
}

Quat quat_from_matrix(const Mat3& r) {
    // Shepperd: pivot on the largest of trace and diagonal for stability.
    const double trace = r(0, 0) + r(1, 1) + r(2, 2);
    Quat q;
    if (trace >= r(0, 0) && trace >= r(1, 1) && trace >= r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + trace);
        q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
    } else if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
        q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
    } else if (r(1, 1) >= r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
        q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
    } else {
        const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
        q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
    }
    return canonicalize(q);
}

namespace {

Quat from_axis_angle(const AxisAngle& aa) {
    const double len = length(aa.axis);
    if (!(len > 0) || !std::isfinite(len) || !std::isfinite(aa.angle))
        throw Error(ErrorCode::invalid_rotation, "axis-angle rotation needs a finite nonzero axis");
    const Vec3 axis = aa.axis / len;
    const double s = std::sin(0.5 * aa.angle);
    return canonicalize({std::cos(0.5 * aa.angle), axis.x * s, axis.y * s, axis.z * s});
}

Quat from_euler(const EulerXYZ& e) {
    if (!std::isfinite(e.rx) || !std::isfinite(e.ry) || !std::isfinite(e.rz))
        throw Error(ErrorCode::invalid_rotation, "euler angles must be finite");
    const Quat qx{std::cos(0.5 * e.rx), std::sin(0.5 * e.rx), 0, 0};
    const Quat qy{std::cos(0.5 * e.ry), 0, std::sin(0.5 * e.ry), 0};
    const Quat qz{std::cos(0.5 * e.rz), 0, 0, std::sin(0.5 * e.rz)};
    return canonicalize(qz * qy * qx);
}

Quat from_checked_matrix(const Mat3& m) {
    const Mat3 g = m * m.transposed();
    double dev = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double d = g(i, j) - (i == j ? 1.0 : 0.0);
            dev += d * d;
        }
    dev = std::sqrt(dev);
    if (!(dev <= 1e-4))
        throw Error(ErrorCode::invalid_rotation, "rotation matrix is not orthonormal");
    if (!(m.determinant() > 0))
        throw Error(ErrorCode::invalid_rotation, "rotation matrix has negative determinant");
    return quat_from_matrix(m);
}

Quat from_quat(const Quat& q) {
    const double n = q.norm();
    if (!(n > 0) || !std::isfinite(n))
        throw Error(ErrorCode::invalid_rotation, "quaternion must be finite and nonzero");
    return canonicalize(q);
}

}  // namespace

Quat to_quaternion(const RotationSpec& spec) {
    struct Visitor {
        Quat operator()(const Quat& q) const { return from_quat(q); }
        Quat operator()(const AxisAngle& aa) const { return from_axis_angle(aa); }
        Quat operator()(const Mat3& m) const { return from_checked_matrix(m); }
        Quat operator()(const EulerXYZ& e) const { return from_euler(e); }
    };
    return std::visit(Visitor{}, spec);
}

AxisAngle to_axis_angle(const Quat& q) {
    const Vec3 v{q.x, q.y, q.z};
    const double s = length(v);
    if (s == 0) return {{0, 0, 1}, 0};
    return {v / s, 2.0 * std::atan2(s, q.w)};
}

EulerXYZ to_euler_xyz(const Quat& q) {
    const Mat3 r = q.to_matrix();
    const double sy = std::clamp(-r(2, 0), -1.0, 1.0);
    EulerXYZ e;
    e.ry = std::asin(sy);
    if (std::abs(sy) < 1.0 - 1e-12) {
        e.rx = std::atan2(r(2, 1), r(2, 2));
        e.rz = std::atan2(r(1, 0), r(0, 0));
    } else {
        // Gimbal lock: only rx - rz (or rx + rz) is determined; pin rz to 0.
        e.rx = std::atan2(-r(1, 2), r(1, 1));
        e.rz = 0;
    }
    return e;
}

double angle_between(const Quat& a, const Quat& b) {
    const double s = dot(a, b) < 0 ? -1.0 : 1.0;
    const Quat d{a.w - s * b.w, a.x - s * b.x, a.y - s * b.y, a.z - s * b.z};
    const Quat m{a.w + s * b.w, a.x + s * b.x, a.y + s * b.y, a.z + s * b.z};
    return 4.0 * std::atan2(d.norm(), m.norm());
}

Mat3 look_at_frame(const Vec3& eye, const Vec3& target, const Vec3* up_hint) {
    const Vec3 d = target - eye;
    const double len = length(d);
    if (!(len > 1e-9))
        throw Error(ErrorCode::degenerate_look_at, "look_at target coincides with eye");
    const Vec3 f = d / len;
    Vec3 hint;
    if (up_hint) {
        hint = *up_hint;
    } else {
        hint = std::abs(f.z) > 1.0 - 1e-6 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
    }
    const Vec3 side = cross(f, hint);
    const double side_len = length(side);
    if (!(side_len > 1e-12))
        throw Error(ErrorCode::degenerate_look_at, "look_at up hint is parallel to the view direction");
    const Vec3 r = side / side_len;
    const Vec3 u = cross(r, f);
    return Mat3::from_columns(r, u, -f);
}

Quat look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3* up_hint) {
    return quat_from_matrix(look_at_frame(eye, target, up_hint));
}

Quat slerp(const Quat& a, const Quat& b, double t) {
    if (t <= 0) return a;
    if (t >= 1) return b;
    Quat bb = b;
    double d = dot(a, b);
    if (d < 0) {
        bb = -b;
        d = -d;
    }
    Quat r;
    if (d > 1.0 - 1e-9) {
        r = {a.w + (bb.w - a.w) * t, a.x + (bb.x - a.x) * t, a.y + (bb.y - a.y) * t,
             a.z + (bb.z - a.z) * t};
    } else {
        const double theta = std::acos(std::min(d, 1.0));
        const double s = std::sin(theta);
        const double wa = std::sin((1.0 - t) * theta) / s;
        const double wb = std::sin(t * theta) / s;
        r = {wa * a.w + wb * bb.w, wa * a.x + wb * bb.x, wa * a.y + wb * bb.y, wa * a.z + wb * bb.z};
    }
    const double n = r.norm();
    return {r.w / n, r.x / n, r.y / n, r.z / n};
}

}  // namespace scirender
