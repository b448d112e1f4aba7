#include "scirender/renderables.hpp"

#include <cmath>

#include "scirender/error.hpp"

namespace scirender {

std::string renderable_kind(const Renderable& r) {
    if (std::holds_alternative<Mesh>(r)) return "mesh";
    if (std::holds_alternative<PointCloud>(r)) return "pointcloud";
    return primitive_kind(std::get<Primitive>(r).spec);
}

const Pose& pose_of(const Renderable& r) {
    return std::visit([](const auto& o) -> const Pose& { return o.pose; }, r);
}

Pose& pose_of(Renderable& r) {
    return std::visit([](auto& o) -> Pose& { return o.pose; }, r);
}

bool is_shadow_catcher(const Renderable& r) {
    const auto* prim = std::get_if<Primitive>(&r);
    if (!prim) return false;
    const auto* plane = std::get_if<primitive::Plane>(&prim->spec);
    return plane && plane->shadow_catcher;
}

namespace {

void validate_mesh(const Mesh& m) {
    m.geometry.validate();
    check_binding(m.appearance.colors, m.geometry);
    validate_material(m.appearance.material);
    if (m.segments) {
        if (m.segments->ids.size() != m.geometry.face_count())
            throw Error(ErrorCode::invalid_geometry, "face segment ids must have one entry per face");
        for (std::uint32_t id : m.segments->ids)
            if (id >= m.segments->materials.size())
                throw Error(ErrorCode::invalid_geometry,
                            "face segment id " + std::to_string(id) + " has no material");
        for (const Material& mat : m.segments->materials) validate_material(mat);
    }
}

void validate_cloud(const PointCloud& pc) {
    if (!(pc.radius > 0) || !std::isfinite(pc.radius))
        throw Error(ErrorCode::invalid_argument, "point radius must be > 0");
    if (!std::isfinite(pc.emission_strength) || pc.emission_strength < 0)
        throw Error(ErrorCode::invalid_argument, "emission_strength must be finite and >= 0");
    if (pc.colors.size() != 1 && pc.colors.size() != pc.points.size())
        throw Error(ErrorCode::bind_error, "point colors must have 1 or " +
                                               std::to_string(pc.points.size()) + " entries");
    if (!pc.normals.empty() && pc.normals.size() != pc.points.size())
        throw Error(ErrorCode::bind_error, "point normals must match the point count");
    for (const Vec3& p : pc.points)
        if (!is_finite(p)) throw Error(ErrorCode::invalid_geometry, "non-finite point");
    for (const Vec4& c : pc.colors)
        if (!(c.x >= 0 && c.x <= 1 && c.y >= 0 && c.y <= 1 && c.z >= 0 && c.z <= 1 && c.w >= 0 &&
              c.w <= 1))
            throw Error(ErrorCode::bind_error, "point color outside [0,1]");
    validate_material(pc.material);
}

}  // namespace

void validate_renderable(const Renderable& r) {
    std::visit(
        [](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, Mesh>) {
                validate_mesh(o);
            } else if constexpr (std::is_same_v<T, PointCloud>) {
                validate_cloud(o);
            } else {
                validate_primitive(o.spec);
                validate_material(o.appearance.material);
                if (!std::holds_alternative<UniformColor>(o.appearance.colors))
                    check_binding(o.appearance.colors, tessellate(o.spec));
                else
                    check_binding(o.appearance.colors, TriMesh{});
            }
        },
        r);
}

std::vector<PointInstance> point_instances(const PointCloud& pc) {
    std::vector<PointInstance> out;
    out.reserve(pc.points.size());
    for (std::size_t i = 0; i < pc.points.size(); ++i) {
        PointInstance inst;
        inst.center = pc.pose.apply(pc.points[i]);
        inst.shape = pc.shape;
        inst.radius = pc.radius;
        inst.color = pc.colors.size() == 1 ? pc.colors[0] : pc.colors[i];
        inst.emission = pc.emission_strength;
        out.push_back(inst);
    }
    return out;
}

TriMesh point_cube(const Vec3& center, double radius) {
    TriMesh m = tessellate(primitive::Cube{2.0});
    for (Vec3& v : m.vertices) v = center + v * radius;
    return m;
}

}  // namespace scirender
