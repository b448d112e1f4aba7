#pragma once

// Point cloud to textured mesh: ball pivoting, quadric simplification, a
// per-face texture atlas and color baking.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scirender/appearance.hpp"
#include "scirender/geometry.hpp"
#include "scirender/image.hpp"

namespace scirender {

// ------------------------------------------------------------ ball pivoting

/// Mean distance from each point to its nearest other point.
double mean_nearest_spacing(const std::vector<Vec3>& points);

/// {1, 1.5, 2} x mean nearest spacing.
std::vector<double> default_bpa_radii(const std::vector<Vec3>& points);

/// Faces are wound so their normals agree with the point normals. Radii run
/// in the given (ascending) order and each pass continues from the previous
/// front. Throws Error(empty_reconstruction) when no triangle is produced and
/// Error(invalid_argument) for bad radii or mismatched normals.
TriMesh ball_pivot(const std::vector<Vec3>& points, const std::vector<Vec3>& normals,
                   const std::vector<double>& radii);

// ----------------------------------------------------------- simplification

struct SimplifyResult {
    TriMesh mesh;
    bool reached_target = true;  // false when no valid collapse was left
};

/// Garland-Heckbert edge collapse down to at most `target_faces` faces.
/// Throws Error(invalid_target) when target_faces < 4.
SimplifyResult simplify_mesh(const TriMesh& mesh, std::size_t target_faces);

// -------------------------------------------------------------------- atlas

struct AtlasLayout {
    int cells_per_side = 0;
    int cell_px = 0;
    int margin_px = 0;    // inset from the cell border
    int diagonal_px = 0;  // offset of each triangle's hypotenuse from the cell diagonal
};

/// Grid layout for `face_count` faces at resolution R. Throws
/// Error(atlas_capacity) naming the smallest resolution that fits.
AtlasLayout atlas_layout(std::size_t face_count, int resolution, int gap_px);

/// Smallest R for which atlas_layout succeeds.
int minimal_atlas_resolution(std::size_t face_count, int gap_px);

/// Two faces per square cell (lower-left and upper-right halves). uv has
/// v = 0 at the bottom row of the texture.
FacesUV build_face_atlas(const TriMesh& mesh, int resolution, int gap_px);

// --------------------------------------------------------------- projection

struct PointProjection {
    std::uint32_t face = 0;
    Vec3 bary;       // weights of the face's v0, v1, v2
    Vec3 foot;       // closest point on the mesh
    double distance = 0;
};

/// Closest point on the triangle soup; ties go to the lowest face index.
std::vector<PointProjection> project_points_to_mesh(const std::vector<Vec3>& points, const TriMesh& mesh);

/// Closest point on one triangle with its barycentric weights.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, Vec3& bary);

// --------------------------------------------------------------------- bake

/// Texels whose centers fall in an atlas triangle get the inverse-distance
/// weighted mean (1 / (d + 1e-6)) of the k nearest projected points; the
/// rest are filled by dilation and stay black where nothing reaches.
/// Throws Error(empty_bake) without projected points.
Image bake_texture(const TriMesh& mesh, const FacesUV& uv, const std::vector<Vec4>& point_colors,
                   const std::vector<PointProjection>& projections, int k, int resolution);

// ----------------------------------------------------------------- pipeline

struct MeshifyConfig {
    std::vector<double> bpa_radii;  // empty: default_bpa_radii
    std::size_t target_faces = 5000;
    int texture_resolution = 1024;
    int gap_px = 2;
    int bake_k = 4;
    int normal_k = 16;
};

void validate_meshify_config(const MeshifyConfig& config);

struct TexturedMesh {
    TriMesh mesh;
    FacesUV uv;
    Image texture;
};

struct MeshifyLog {
    std::vector<std::string> stages;  // in execution order
    bool normals_estimated = false;
    std::vector<double> radii;
    std::size_t faces_reconstructed = 0;
    std::size_t faces_simplified = 0;
    bool simplify_reached_target = true;
    double atlas_occupancy = 0;  // fraction of texels inside triangles
};

struct MeshifyResult {
    TexturedMesh textured;
    MeshifyLog log;
};

/// Errors carry the failing stage: "input", "normals", "radii",
/// "ball_pivot", "simplify", "atlas", "project" or "bake". The normals and
/// radii stages only run when those are not supplied.
MeshifyResult meshify_pc(const std::vector<Vec3>& points, const std::vector<Vec4>& colors,
                         const std::optional<std::vector<Vec3>>& normals, const MeshifyConfig& config);

}  // namespace scirender
