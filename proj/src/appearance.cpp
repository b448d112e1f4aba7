#include "scirender/appearance.hpp"

#include <cmath>

#include "scirender/error.hpp"
#include "scirender/io.hpp"

namespace scirender {

// ---------------------------------------------------------------- UV maps

Vec2 interpolate_uv(const UVMap& map, const TriMesh& geom, std::size_t face, const Vec3& bary) {
    if (const auto* vuv = std::get_if<VertexUV>(&map)) {
        const Face& f = geom.faces[face];
        const Vec2 a = vuv->uv[f[0]], b = vuv->uv[f[1]], c = vuv->uv[f[2]];
        return {a.x * bary.x + b.x * bary.y + c.x * bary.z, a.y * bary.x + b.y * bary.y + c.y * bary.z};
    }
    const auto& tri = std::get<FacesUV>(map).uv[face];
    return {tri[0].x * bary.x + tri[1].x * bary.y + tri[2].x * bary.z,
            tri[0].y * bary.x + tri[1].y * bary.y + tri[2].y * bary.z};
}

// ---------------------------------------------------------- file textures

FileTexture::FileTexture(std::string path, Loader loader)
    : path_(std::move(path)), loader_(std::move(loader)) {
    if (!loader_) loader_ = [](const std::string& p) { return load_texture_png(p); };
}

const Image& FileTexture::image() const {
    std::call_once(once_, [this] {
        auto img = std::make_shared<Image>(loader_(path_));
        if (img->empty()) throw Error(ErrorCode::invalid_image, "texture '" + path_ + "' is empty");
        image_ = std::move(img);
        loaded_.store(true, std::memory_order_release);
    });
    return *image_;
}

// ---------------------------------------------------------- color sources

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }
bool in_unit(const Vec4& c) { return in_unit(c.x) && in_unit(c.y) && in_unit(c.z) && in_unit(c.w); }

void check_uv(const UVMap& map, const TriMesh& geom) {
    if (const auto* vuv = std::get_if<VertexUV>(&map)) {
        if (vuv->uv.size() != geom.vertex_count())
            throw Error(ErrorCode::bind_error,
                        "vertex_uv has " + std::to_string(vuv->uv.size()) + " entries, geometry has " +
                            std::to_string(geom.vertex_count()) + " vertices");
        for (const Vec2& t : vuv->uv)
            if (!std::isfinite(t.x) || !std::isfinite(t.y))
                throw Error(ErrorCode::bind_error, "non-finite texture coordinate");
        return;
    }
    const auto& fuv = std::get<FacesUV>(map);
    if (fuv.uv.size() != geom.face_count())
        throw Error(ErrorCode::bind_error,
                    "faces_uv has " + std::to_string(fuv.uv.size()) + " entries, geometry has " +
                        std::to_string(geom.face_count()) + " faces");
    for (const auto& tri : fuv.uv)
        for (const Vec2& t : tri)
            if (!std::isfinite(t.x) || !std::isfinite(t.y))
                throw Error(ErrorCode::bind_error, "non-finite texture coordinate");
}

}  // namespace

void check_binding(const ColorSource& source, const TriMesh& geom) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, UniformColor>) {
                if (!in_unit(s.rgba)) throw Error(ErrorCode::bind_error, "uniform color outside [0,1]");
            } else if constexpr (std::is_same_v<T, VertexColors>) {
                if (s.rgba.size() != geom.vertex_count())
                    throw Error(ErrorCode::bind_error,
                                "per-vertex colors have " + std::to_string(s.rgba.size()) +
                                    " entries, geometry has " + std::to_string(geom.vertex_count()) +
                                    " vertices");
                for (const Vec4& c : s.rgba)
                    if (!in_unit(c)) throw Error(ErrorCode::bind_error, "per-vertex color outside [0,1]");
            } else if constexpr (std::is_same_v<T, TextureColors>) {
                if (!s.image || s.image->empty())
                    throw Error(ErrorCode::bind_error, "texture color source has no image");
                check_uv(s.uv, geom);
            } else {
                if (!s.texture) throw Error(ErrorCode::bind_error, "file texture missing");
                check_uv(s.uv, geom);
            }
        },
        source);
}

Vec4 shade_color(const TriMesh& geom, std::size_t face, const Vec3& bary, const ColorSource& source) {
    return std::visit(
        [&](const auto& s) -> Vec4 {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, UniformColor>) {
                return s.rgba;
            } else if constexpr (std::is_same_v<T, VertexColors>) {
                const Face& f = geom.faces[face];
                if (f[0] >= s.rgba.size() || f[1] >= s.rgba.size() || f[2] >= s.rgba.size())
                    throw Error(ErrorCode::bind_error, "per-vertex colors do not cover the geometry");
                return s.rgba[f[0]] * bary.x + s.rgba[f[1]] * bary.y + s.rgba[f[2]] * bary.z;
            } else if constexpr (std::is_same_v<T, TextureColors>) {
                return sample_texture(*s.image, interpolate_uv(s.uv, geom, face, bary));
            } else {
                return sample_texture(s.texture->image(), interpolate_uv(s.uv, geom, face, bary));
            }
        },
        source);
}

// ---------------------------------------------------------------- materials

PrincipledMaterial metal_material() {
    PrincipledMaterial m;
    m.metallic = 1;
    m.roughness = 0.25;
    return m;
}

PrincipledMaterial plastic_material() {
    PrincipledMaterial m;
    m.metallic = 0;
    m.roughness = 0.4;
    m.specular = 0.5;
    return m;
}

WireframeMaterial metal_wireframe_material(double thickness, const Vec3& wire_color) {
    return {metal_material(), thickness, wire_color};
}

WireframeMaterial plastic_wireframe_material(double thickness, const Vec3& wire_color) {
    return {plastic_material(), thickness, wire_color};
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

bool nonneg(const Vec3& c) { return is_finite(c) && c.x >= 0 && c.y >= 0 && c.z >= 0; }

void validate_base(const BaseMaterial& base) {
    if (const auto* p = std::get_if<PrincipledMaterial>(&base)) {
        require(nonneg(p->base_modulation), "base_modulation must be finite and >= 0");
        require(in_unit(p->metallic), "metallic must be in [0,1]");
        require(in_unit(p->roughness), "roughness must be in [0,1]");
        require(std::isfinite(p->specular) && p->specular >= 0, "specular must be >= 0");
        require(nonneg(p->emission_color), "emission_color must be finite and >= 0");
        require(std::isfinite(p->emission_strength) && p->emission_strength >= 0,
                "emission_strength must be >= 0");
        require(in_unit(p->alpha), "alpha must be in [0,1]");
    } else {
        require(in_unit(std::get<GlossyMaterial>(base).roughness), "roughness must be in [0,1]");
    }
}

}  // namespace

void validate_material(const Material& material) {
    if (const auto* w = std::get_if<WireframeMaterial>(&material)) {
        require(std::isfinite(w->thickness) && w->thickness > 0, "wireframe thickness must be > 0");
        require(nonneg(w->wire_color), "wire_color must be finite and >= 0");
        validate_base(w->base);
        return;
    }
    BaseMaterial storage;
    validate_base(base_of(material, storage));
}

const BaseMaterial& base_of(const Material& material, BaseMaterial& storage) {
    if (const auto* w = std::get_if<WireframeMaterial>(&material)) return w->base;
    if (const auto* p = std::get_if<PrincipledMaterial>(&material))
        storage = *p;
    else
        storage = std::get<GlossyMaterial>(material);
    return storage;
}

double material_alpha(const Material& material) {
    BaseMaterial storage;
    const BaseMaterial& b = base_of(material, storage);
    if (const auto* p = std::get_if<PrincipledMaterial>(&b)) return p->alpha;
    return 1.0;
}

Vec3 material_emission(const Material& material) {
    BaseMaterial storage;
    const BaseMaterial& b = base_of(material, storage);
    if (const auto* p = std::get_if<PrincipledMaterial>(&b)) return p->emission_color * p->emission_strength;
    return {};
}

// ------------------------------------------------------------------- BSDFs

namespace {

double schlick_weight(double c) {
    const double m = std::clamp(1.0 - c, 0.0, 1.0);
    const double m2 = m * m;
    return m2 * m2 * m;
}

double ggx_alpha(double roughness) { return std::max(roughness * roughness, 1e-3); }

double ggx_d(double alpha, double cos_h) {
    const double a2 = alpha * alpha;
    const double t = cos_h * cos_h * (a2 - 1.0) + 1.0;
    return a2 / (kPi * t * t);
}

double ggx_lambda(double alpha, double cos_t) {
    const double c2 = cos_t * cos_t;
    const double tan2 = std::max(0.0, 1.0 - c2) / c2;
    return 0.5 * (std::sqrt(1.0 + alpha * alpha * tan2) - 1.0);
}

// Height-correlated Smith masking-shadowing.
double ggx_g2(double alpha, double cos_i, double cos_o) {
    return 1.0 / (1.0 + ggx_lambda(alpha, cos_i) + ggx_lambda(alpha, cos_o));
}

// Dielectric Fresnel reflectance, linear in `specular` (0.5 gives F0 = 0.04).
double dielectric_fresnel(double specular, double c) {
    const double f = 0.04 + 0.96 * schlick_weight(c);
    return std::min(1.0, 2.0 * specular * f);
}

struct Lobes {
    const PrincipledMaterial* principled = nullptr;
    double alpha = 1;
};

Lobes lobes_of(const BaseMaterial& b) {
    Lobes l;
    if (const auto* p = std::get_if<PrincipledMaterial>(&b)) {
        l.principled = p;
        l.alpha = ggx_alpha(p->roughness);
    } else {
        l.alpha = ggx_alpha(std::get<GlossyMaterial>(b).roughness);
    }
    return l;
}

double specular_probability(const Lobes& l) {
    if (!l.principled) return 1.0;
    const double m = l.principled->metallic;
    return m + (1.0 - m) * 0.5 * std::min(1.0, 2.0 * l.principled->specular);
}

Vec3 eval_lobes(const Lobes& l, const Vec3& n, const Vec3& wo, const Vec3& wi, const Vec3& base_color) {
    const double ci = dot(n, wi), co = dot(n, wo);
    if (ci <= 0.0 || co <= 0.0) return {};
    Vec3 h = wi + wo;
    const double hl = length(h);
    if (hl == 0.0) return {};
    h = h / hl;
    const double ch = dot(n, h), dh = std::clamp(dot(wi, h), 0.0, 1.0);
    const double micro = ggx_d(l.alpha, ch) * ggx_g2(l.alpha, ci, co) / (4.0 * ci * co);
    if (!l.principled) return base_color * micro;

    const PrincipledMaterial& p = *l.principled;
    const Vec3 base = base_color * p.base_modulation;
    const double m = p.metallic;
    Vec3 f{};
    if (m < 1.0) {
        const double wd = (1.0 - dielectric_fresnel(p.specular, ci)) * (1.0 - dielectric_fresnel(p.specular, co));
        const Vec3 diffuse = base * (wd * kInvPi);
        const double spec = dielectric_fresnel(p.specular, dh) * micro;
        f += (diffuse + Vec3{spec, spec, spec}) * (1.0 - m);
    }
    if (m > 0.0) {
        const double w = schlick_weight(dh);
        const Vec3 fresnel = base + (Vec3{1, 1, 1} - base) * w;
        f += fresnel * (micro * m);
    }
    return f;
}

double pdf_lobes(const Lobes& l, const Vec3& n, const Vec3& wo, const Vec3& wi) {
    const double ci = dot(n, wi), co = dot(n, wo);
    if (ci <= 0.0 || co <= 0.0) return 0.0;
    const double ps = specular_probability(l);
    double pdf = (1.0 - ps) * ci * kInvPi;
    if (ps > 0.0) {
        Vec3 h = wi + wo;
        const double hl = length(h);
        if (hl > 0.0) {
            h = h / hl;
            const double ch = dot(n, h);
            const double oh = dot(wo, h);
            if (ch > 0.0 && oh > 0.0) pdf += ps * ggx_d(l.alpha, ch) * ch / (4.0 * oh);
        }
    }
    return pdf;
}

Vec3 to_world(const Vec3& n, const Vec3& local) {
    Vec3 t, b;
    orthonormal_basis(n, t, b);
    return t * local.x + b * local.y + n * local.z;
}

}  // namespace

Vec3 eval_bsdf(const Material& mat, const Vec3& n, const Vec3& wo, const Vec3& wi, const Vec3& base_color) {
    BaseMaterial storage;
    return eval_lobes(lobes_of(base_of(mat, storage)), n, wo, wi, base_color);
}

double pdf_bsdf(const Material& mat, const Vec3& n, const Vec3& wo, const Vec3& wi, const Vec3&) {
    BaseMaterial storage;
    return pdf_lobes(lobes_of(base_of(mat, storage)), n, wo, wi);
}

BsdfSample sample_bsdf(const Material& mat, const Vec3& n, const Vec3& wo, const Vec3& base_color,
                       const Vec2& u, double u_lobe) {
    BaseMaterial storage;
    const Lobes l = lobes_of(base_of(mat, storage));
    BsdfSample s;
    if (dot(n, wo) <= 0.0) return s;
    const double ps = specular_probability(l);
    const double phi = 2.0 * kPi * u.y;
    if (u_lobe < ps) {
        const double tan2 = l.alpha * l.alpha * u.x / (1.0 - u.x);
        const double ct = 1.0 / std::sqrt(1.0 + tan2);
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        const Vec3 h = to_world(n, {st * std::cos(phi), st * std::sin(phi), ct});
        s.wi = h * (2.0 * dot(wo, h)) - wo;
    } else {
        const double r = std::sqrt(u.x);
        s.wi = to_world(n, {r * std::cos(phi), r * std::sin(phi), std::sqrt(std::max(0.0, 1.0 - u.x))});
    }
    const double ci = dot(n, s.wi);
    if (ci <= 0.0) return s;
    s.pdf = pdf_lobes(l, n, wo, s.wi);
    if (!(s.pdf > 0.0)) return s;
    s.weight = eval_lobes(l, n, wo, s.wi, base_color) * (ci / s.pdf);
    s.valid = true;
    return s;
}

// ---------------------------------------------------------------- wireframe

namespace {

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    return length(p - (a + ab * t));
}

}  // namespace

double wireframe_factor(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& bary,
                        double thickness) {
    const Vec3 p = p0 * bary.x + p1 * bary.y + p2 * bary.z;
    const double d = std::min({segment_distance(p, p0, p1), segment_distance(p, p1, p2),
                               segment_distance(p, p2, p0)});
    // Barycentric zero means the point is on an edge regardless of rounding.
    if (bary.x == 0.0 || bary.y == 0.0 || bary.z == 0.0) return 1.0;
    return d <= 0.5 * thickness ? 1.0 : 0.0;
}

double wireframe_factor(const TriMesh& geom, std::size_t face, const Vec3& bary, double thickness) {
    const Face& f = geom.faces[face];
    return wireframe_factor(geom.vertices[f[0]], geom.vertices[f[1]], geom.vertices[f[2]], bary, thickness);
}

}  // namespace scirender
