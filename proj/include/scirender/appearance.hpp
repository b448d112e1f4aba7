#pragma once

// Color sources and materials.
//
// Color values are linear RGBA in [0,1]. Textures loaded from PNG are decoded
// from sRGB on load. Materials are evaluated directly as BSDFs; there is no
// node graph.

#include <array>
#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "scirender/geometry.hpp"
#include "scirender/image.hpp"

namespace scirender {

// ---------------------------------------------------------------- UV maps

struct VertexUV {
    std::vector<Vec2> uv;  // one per vertex
};
struct FacesUV {
    std::vector<std::array<Vec2, 3>> uv;  // one triple per face
};
using UVMap = std::variant<VertexUV, FacesUV>;

/// Texture coordinate at a barycentric point of a face.
Vec2 interpolate_uv(const UVMap& map, const TriMesh& geom, std::size_t face, const Vec3& bary);

// ---------------------------------------------------------- color sources

struct UniformColor {
    Vec4 rgba{0.8, 0.8, 0.8, 1.0};
};

struct VertexColors {
    std::vector<Vec4> rgba;  // alpha is 1 when built from RGB
    int channels = 4;        // 3 or 4; remembered for serialization
};

struct TextureColors {
    std::shared_ptr<const Image> image;
    UVMap uv;
};

/// Texture read from disk on first use. Loading happens at most once and is
/// thread-safe; concurrent readers then share the decoded image.
class FileTexture {
public:
    using Loader = std::function<Image(const std::string&)>;

    /// The default loader decodes a PNG with read_png.
    explicit FileTexture(std::string path, Loader loader = {});

    const std::string& path() const { return path_; }
    const Image& image() const;  // throws Error(io_error) if loading fails
    bool loaded() const { return loaded_.load(std::memory_order_acquire); }

private:
    std::string path_;
    Loader loader_;
    mutable std::once_flag once_;
    mutable std::shared_ptr<const Image> image_;
    mutable std::atomic<bool> loaded_{false};
};

struct FileTextureColors {
    std::shared_ptr<const FileTexture> texture;
    UVMap uv;
};

using ColorSource = std::variant<UniformColor, VertexColors, TextureColors, FileTextureColors>;

/// Throws Error(bind_error) when per-vertex/UV array sizes do not match `geom`,
/// or when channel values fall outside [0,1].
void check_binding(const ColorSource& source, const TriMesh& geom);

/// Color at barycentric point `bary` (weights of the face's v0, v1, v2).
Vec4 shade_color(const TriMesh& geom, std::size_t face, const Vec3& bary, const ColorSource& source);

// ---------------------------------------------------------------- materials

struct PrincipledMaterial {
    Vec3 base_modulation{1, 1, 1};  // multiplies the color source during shading
    double metallic = 0;
    double roughness = 0.5;
    double specular = 0.5;
    Vec3 emission_color{0, 0, 0};
    double emission_strength = 0;
    double alpha = 1;
    bool operator==(const PrincipledMaterial&) const = default;
};

struct GlossyMaterial {
    double roughness = 0.2;
    bool operator==(const GlossyMaterial&) const = default;
};

using BaseMaterial = std::variant<PrincipledMaterial, GlossyMaterial>;

/// Draws edges of width `thickness` (world units) in `wire_color` over `base`.
struct WireframeMaterial {
    BaseMaterial base = PrincipledMaterial{};
    double thickness = 0.01;
    Vec3 wire_color{0, 0, 0};
    bool operator==(const WireframeMaterial&) const = default;
};

using Material = std::variant<PrincipledMaterial, GlossyMaterial, WireframeMaterial>;

PrincipledMaterial metal_material();
PrincipledMaterial plastic_material();
WireframeMaterial metal_wireframe_material(double thickness = 0.01, const Vec3& wire_color = {0, 0, 0});
WireframeMaterial plastic_wireframe_material(double thickness = 0.01,
                                             const Vec3& wire_color = {0, 0, 0});

/// Throws Error(invalid_argument) for out-of-range parameters.
void validate_material(const Material& material);

const BaseMaterial& base_of(const Material& material, BaseMaterial& storage);
double material_alpha(const Material& material);
Vec3 material_emission(const Material& material);

struct Appearance {
    ColorSource colors = UniformColor{};
    Material material = PrincipledMaterial{};
};

// ------------------------------------------------------------------- BSDFs
//
// Directions point away from the surface. `n` is the unit shading normal on
// the side of `wo`. Returned values are reflectance (1/sr) per RGB channel.
//
// Principled: (1 - metallic) * [w_d(wi) w_d(wo) * base/pi + dielectric GGX]
//             + metallic * conductor GGX(F0 = base)
// with the dielectric Fresnel F_d = min(1, 2 * specular * Schlick(0.04)) and
// w_d = 1 - F_d. Glossy: a GGX lobe tinted by base color.

Vec3 eval_bsdf(const Material& mat, const Vec3& n, const Vec3& wo, const Vec3& wi,
               const Vec3& base_color);

struct BsdfSample {
    Vec3 wi;
    Vec3 weight;  // f * cos / pdf
    double pdf = 0;
    bool valid = false;
};

/// `u` drives direction sampling and `u_lobe` lobe selection, both in [0,1).
BsdfSample sample_bsdf(const Material& mat, const Vec3& n, const Vec3& wo, const Vec3& base_color,
                       const Vec2& u, double u_lobe);

double pdf_bsdf(const Material& mat, const Vec3& n, const Vec3& wo, const Vec3& wi,
                const Vec3& base_color);

// ---------------------------------------------------------------- wireframe

/// 1 when the point with barycentric coordinates `bary` on triangle (p0, p1, p2)
/// lies within thickness/2 of one of the triangle's edges, else 0.
double wireframe_factor(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& bary,
                        double thickness);

double wireframe_factor(const TriMesh& geom, std::size_t face, const Vec3& bary, double thickness);

}  // namespace scirender
