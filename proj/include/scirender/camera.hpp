#pragma once

// Perspective and orthographic cameras.
//
// Pixel (i, j) covers [i, i+1) x [j, j+1) with (0, 0) at the top-left corner.
// Cameras look along their local -Z axis with local +Y up.

#include <optional>
#include <variant>

#include "scirender/math.hpp"

namespace scirender {

struct PerspectiveCamera {
    double focal_px = 500;  // focal length in pixels
    int width = 640;
    int height = 480;
    Pose pose;

    static PerspectiveCamera from_fov(double fov_x, int width, int height, const Pose& pose = {});
    double fov_x() const;
};

struct OrthographicCamera {
    double ortho_scale = 2;  // width of the view in world units
    int width = 640;
    int height = 480;
    Pose pose;
};

using Camera = std::variant<PerspectiveCamera, OrthographicCamera>;

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit
};

/// Throws Error(invalid_argument) for bad resolution, focal length or scale.
void validate_camera(const Camera& cam);

int camera_width(const Camera& cam);
int camera_height(const Camera& cam);
const Pose& camera_pose(const Camera& cam);
Pose& camera_pose(Camera& cam);

/// Same view at a different resolution. Perspective cameras keep their
/// horizontal field of view; orthographic cameras keep their scale.
Camera with_resolution(const Camera& cam, int width, int height);

/// Ray through image-plane point (i + ju, j + jv). Throws Error(bounds_error)
/// when the pixel is outside the image.
Ray generate_ray(const Camera& cam, int i, int j, const Vec2& jitter);

/// Ray through continuous image coordinates (u, v); no bounds check.
Ray generate_ray_continuous(const Camera& cam, double u, double v);

/// Continuous pixel coordinates of a world point. Empty when the point is at
/// or behind a perspective camera's image plane. Points outside the image are
/// still returned.
std::optional<Vec2> project(const Camera& cam, const Vec3& world_point);

}  // namespace scirender
