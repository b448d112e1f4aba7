#include "scirender/camera.hpp"

#include <cmath>
#include <string>

#include "scirender/error.hpp"

namespace scirender {

PerspectiveCamera PerspectiveCamera::from_fov(double fov_x, int width, int height, const Pose& pose) {
    if (!(fov_x > 0 && fov_x < kPi))
        throw Error(ErrorCode::invalid_argument, "fov_x must be in (0, pi)");
    PerspectiveCamera c;
    c.focal_px = 0.5 * width / std::tan(0.5 * fov_x);
    c.width = width;
    c.height = height;
    c.pose = pose;
    return c;
}

double PerspectiveCamera::fov_x() const { return 2.0 * std::atan(0.5 * width / focal_px); }

void validate_camera(const Camera& cam) {
    const int w = camera_width(cam), h = camera_height(cam);
    if (w < 1 || h < 1) throw Error(ErrorCode::invalid_argument, "camera resolution must be >= 1x1");
    if (const auto* p = std::get_if<PerspectiveCamera>(&cam)) {
        if (!(p->focal_px > 0) || !std::isfinite(p->focal_px))
            throw Error(ErrorCode::invalid_argument, "focal length must be > 0");
    } else {
        const auto& o = std::get<OrthographicCamera>(cam);
        if (!(o.ortho_scale > 0) || !std::isfinite(o.ortho_scale))
            throw Error(ErrorCode::invalid_argument, "ortho_scale must be > 0");
    }
}

int camera_width(const Camera& cam) {
    return std::visit([](const auto& c) { return c.width; }, cam);
}

int camera_height(const Camera& cam) {
    return std::visit([](const auto& c) { return c.height; }, cam);
}

const Pose& camera_pose(const Camera& cam) {
    return std::visit([](const auto& c) -> const Pose& { return c.pose; }, cam);
}

Pose& camera_pose(Camera& cam) {
    return std::visit([](auto& c) -> Pose& { return c.pose; }, cam);
}

Camera with_resolution(const Camera& cam, int width, int height) {
    Camera out = cam;
    if (auto* p = std::get_if<PerspectiveCamera>(&out)) {
        p->focal_px = p->focal_px * width / p->width;
        p->width = width;
        p->height = height;
    } else {
        auto& o = std::get<OrthographicCamera>(out);
        o.width = width;
        o.height = height;
    }
    return out;
}

Ray generate_ray(const Camera& cam, int i, int j, const Vec2& jitter) {
    const int w = camera_width(cam), h = camera_height(cam);
    if (i < 0 || i >= w || j < 0 || j >= h)
        throw Error(ErrorCode::bounds_error, "pixel (" + std::to_string(i) + ", " + std::to_string(j) +
                                                 ") outside " + std::to_string(w) + "x" +
                                                 std::to_string(h) + " image");
    return generate_ray_continuous(cam, i + jitter.x, j + jitter.y);
}

Ray generate_ray_continuous(const Camera& cam, double u, double v) {
    if (const auto* p = std::get_if<PerspectiveCamera>(&cam)) {
        const Vec3 local{u - 0.5 * p->width, 0.5 * p->height - v, -p->focal_px};
        return {p->pose.position, normalize(p->pose.apply_direction(local))};
    }
    const auto& o = std::get<OrthographicCamera>(cam);
    const double s = o.ortho_scale / o.width;
    const Vec3 local{(u - 0.5 * o.width) * s, (0.5 * o.height - v) * s, 0.0};
    return {o.pose.apply(local), o.pose.apply_direction({0, 0, -1})};
}

std::optional<Vec2> project(const Camera& cam, const Vec3& world_point) {
    const Vec3 local = camera_pose(cam).inverse_apply(world_point);
    if (const auto* p = std::get_if<PerspectiveCamera>(&cam)) {
        if (local.z >= 0.0) return std::nullopt;
        const double s = p->focal_px / -local.z;
        return Vec2{0.5 * p->width + local.x * s, 0.5 * p->height - local.y * s};
    }
    const auto& o = std::get<OrthographicCamera>(cam);
    const double inv = o.width / o.ortho_scale;
    return Vec2{0.5 * o.width + local.x * inv, 0.5 * o.height - local.y * inv};
}

}  // namespace scirender
