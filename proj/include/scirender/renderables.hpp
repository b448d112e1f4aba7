#pragma once

// Scene objects: triangle meshes, point clouds and primitives.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "scirender/appearance.hpp"
#include "scirender/geometry.hpp"

namespace scirender {

/// Per-face material overrides: face f uses materials[ids[f]].
struct FaceSegments {
    std::vector<std::uint32_t> ids;
    std::vector<Material> materials;
};

struct Mesh {
    TriMesh geometry;
    Appearance appearance;
    std::optional<FaceSegments> segments;
    Pose pose;
};

enum class PointShape { sphere, cube };

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec4> colors{{0.8, 0.8, 0.8, 1.0}};  // 1 (uniform) or one per point
    std::vector<Vec3> normals;                       // empty or one per point
    PointShape shape = PointShape::sphere;
    double radius = 0.01;
    double emission_strength = 0;
    Material material = PrincipledMaterial{};
    Pose pose;
};

/// Tessellated primitive. A plane with shadow_catcher set only shows shadows.
struct Primitive {
    PrimitiveSpec spec = primitive::Cube{};
    Appearance appearance;
    Pose pose;
};

using Renderable = std::variant<Mesh, PointCloud, Primitive>;

/// "mesh", "pointcloud", or the primitive kind ("cube", "sphere", ...).
std::string renderable_kind(const Renderable& r);

const Pose& pose_of(const Renderable& r);
Pose& pose_of(Renderable& r);

/// Throws Error(invalid_geometry | bind_error | invalid_primitive | invalid_argument).
void validate_renderable(const Renderable& r);

bool is_shadow_catcher(const Renderable& r);

struct PointInstance {
    Vec3 center;  // world space
    PointShape shape = PointShape::sphere;
    double radius = 0;
    Vec4 color;
    double emission = 0;
};

std::vector<PointInstance> point_instances(const PointCloud& pc);

/// Axis-aligned box of half-size `radius` around `center` (12 triangles).
TriMesh point_cube(const Vec3& center, double radius);

}  // namespace scirender
