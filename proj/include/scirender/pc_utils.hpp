#pragma once

// Point-cloud normal estimation and camera-facing colorization.

#include <cstdint>
#include <optional>
#include <vector>

#include "scirender/math.hpp"

namespace scirender {

struct NormalEstimate {
    std::vector<Vec3> normals;              // unit
    std::vector<std::uint32_t> degenerate;  // points whose two smallest eigenvalues coincide
};

/// PCA normals over the k nearest neighbors of each point (the point itself
/// included). With a reference, normals are flipped to face it.
/// Throws Error(insufficient_points) when N < k and Error(invalid_argument) when k < 3.
NormalEstimate estimate_normals_from_pointcloud(const std::vector<Vec3>& points, int k,
                                                const std::optional<Vec3>& orientation_reference = {});

/// Back-facing points (normal . (camera - point) < 0) get (back_color,
/// back_alpha); the rest keep their front color with alpha 1.
/// `front_colors` has 1 or N entries. Throws Error(bind_error) otherwise.
std::vector<Vec4> approximate_colors_from_camera(const std::vector<Vec3>& points,
                                                 const std::vector<Vec3>& normals,
                                                 const Vec3& camera_position,
                                                 const std::vector<Vec3>& front_colors,
                                                 const Vec3& back_color = {0.8, 0.8, 0.8},
                                                 double back_alpha = 0.2);

}  // namespace scirender
