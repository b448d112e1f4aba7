#pragma once

// Triangle meshes and the mesh/parametric primitive generators.

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "scirender/math.hpp"

namespace scirender {

using Face = std::array<std::uint32_t, 3>;

/// Indexed triangle geometry in object space.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::vector<Vec3> normals;  // empty, or one unit normal per vertex

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t face_count() const { return faces.size(); }
    bool has_normals() const { return !normals.empty(); }

    /// Throws Error(invalid_geometry) on out-of-range indices, repeated indices
    /// within a face, non-finite vertices, or normals that are not unit within 1e-4.
    void validate() const;

    bool operator==(const TriMesh&) const = default;
};

Vec3 face_normal(const TriMesh& mesh, std::size_t face);  // unit, right-hand winding
double face_area(const TriMesh& mesh, std::size_t face);
double surface_area(const TriMesh& mesh);

namespace primitive {

struct Cube {
    double size = 2;
};
struct Circle {
    double radius = 1;
    int segments = 32;
};
struct Cylinder {
    double radius = 1;
    double height = 2;
    int segments = 32;
};
struct Plane {
    double size = 2;
    bool shadow_catcher = false;
};
struct Ellipsoid {
    double rx = 1, ry = 1, rz = 1;
    int subdivisions = 3;
};
struct Sphere {
    double radius = 1;
    int subdivisions = 3;
};
struct Bezier {
    std::vector<Vec3> control_points;
    double bevel_radius = 0.01;
    int samples = 32;
    int sides = 8;
};

}  // namespace primitive

using PrimitiveSpec = std::variant<primitive::Cube, primitive::Circle, primitive::Cylinder,
                                   primitive::Plane, primitive::Ellipsoid, primitive::Sphere,
                                   primitive::Bezier>;

/// Short kind name used for auto-generated tags and in scene files ("cube", "sphere", ...).
const char* primitive_kind(const PrimitiveSpec& spec);

/// Throws Error(invalid_primitive) when a dimension is not positive, segments < 3,
/// subdivisions outside [0, 8], or fewer than 2 Bezier control points.
void validate_primitive(const PrimitiveSpec& spec);

/// Triangulates a primitive. Cube, sphere, ellipsoid and cylinder are closed;
/// plane, circle and Bezier tubes are open. Spheres are subdivided icosahedra
/// (20 * 4^s faces) with smooth normals.
TriMesh tessellate(const PrimitiveSpec& spec);

/// de Casteljau evaluation.
Vec3 sample_bezier(const std::vector<Vec3>& control_points, double t);

}  // namespace scirender
