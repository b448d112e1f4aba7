#include "scirender/geometry.hpp"

#include <cmath>
#include <map>
#include <string>

#include "scirender/error.hpp"

namespace scirender {

void TriMesh::validate() const {
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i)
        if (!is_finite(vertices[i]))
            throw Error(ErrorCode::invalid_geometry, "vertex " + std::to_string(i) + " is not finite");
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const Face& face = faces[f];
        for (auto idx : face)
            if (idx >= n)
                throw Error(ErrorCode::invalid_geometry,
                            "face " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                                " but the mesh has " + std::to_string(n));
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
            throw Error(ErrorCode::invalid_geometry, "face " + std::to_string(f) + " is degenerate");
    }
    if (!normals.empty()) {
        if (normals.size() != n)
            throw Error(ErrorCode::invalid_geometry, "normal count does not match vertex count");
        for (std::size_t i = 0; i < n; ++i)
            if (!(std::abs(length(normals[i]) - 1.0) <= 1e-4))
                throw Error(ErrorCode::invalid_geometry, "normal " + std::to_string(i) + " is not unit");
    }
}

Vec3 face_normal(const TriMesh& mesh, std::size_t f) {
    const Face& face = mesh.faces[f];
    const Vec3 n = cross(mesh.vertices[face[1]] - mesh.vertices[face[0]],
                         mesh.vertices[face[2]] - mesh.vertices[face[0]]);
    const double len = length(n);
    return len > 0 ? n / len : Vec3{0, 0, 0};
}

double face_area(const TriMesh& mesh, std::size_t f) {
    const Face& face = mesh.faces[f];
    return 0.5 * length(cross(mesh.vertices[face[1]] - mesh.vertices[face[0]],
                              mesh.vertices[face[2]] - mesh.vertices[face[0]]));
}

double surface_area(const TriMesh& mesh) {
    double a = 0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) a += face_area(mesh, f);
    return a;
}

namespace {

struct KindVisitor {
    const char* operator()(const primitive::Cube&) const { return "cube"; }
    const char* operator()(const primitive::Circle&) const { return "circle"; }
    const char* operator()(const primitive::Cylinder&) const { return "cylinder"; }
    const char* operator()(const primitive::Plane&) const { return "plane"; }
    const char* operator()(const primitive::Ellipsoid&) const { return "ellipsoid"; }
    const char* operator()(const primitive::Sphere&) const { return "sphere"; }
    const char* operator()(const primitive::Bezier&) const { return "bezier"; }
};

[[noreturn]] void invalid(const std::string& what) {
    throw Error(ErrorCode::invalid_primitive, what);
}

void require_positive(double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) invalid(std::string(name) + " must be positive");
}

void require_subdivisions(int s) {
    if (s < 0 || s > 8) invalid("subdivisions must be in [0, 8]");
}

struct ValidateVisitor {
    void operator()(const primitive::Cube& c) const { require_positive(c.size, "size"); }
    void operator()(const primitive::Circle& c) const {
        require_positive(c.radius, "radius");
        if (c.segments < 3) invalid("segments must be at least 3");
    }
    void operator()(const primitive::Cylinder& c) const {
        require_positive(c.radius, "radius");
        require_positive(c.height, "height");
        if (c.segments < 3) invalid("segments must be at least 3");
    }
    void operator()(const primitive::Plane& p) const { require_positive(p.size, "size"); }
    void operator()(const primitive::Ellipsoid& e) const {
        require_positive(e.rx, "rx");
        require_positive(e.ry, "ry");
        require_positive(e.rz, "rz");
        require_subdivisions(e.subdivisions);
    }
    void operator()(const primitive::Sphere& s) const {
        require_positive(s.radius, "radius");
        require_subdivisions(s.subdivisions);
    }
    void operator()(const primitive::Bezier& b) const {
        if (b.control_points.size() < 2) invalid("a Bezier curve needs at least 2 control points");
        for (const Vec3& p : b.control_points)
            if (!is_finite(p)) invalid("Bezier control points must be finite");
        require_positive(b.bevel_radius, "bevel_radius");
        if (b.samples < 2) invalid("samples must be at least 2");
        if (b.sides < 3) invalid("sides must be at least 3");
    }
};

TriMesh make_cube(double size) {
    const double h = 0.5 * size;
    TriMesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.push_back({(i & 1) ? h : -h, (i & 2) ? h : -h, (i & 4) ? h : -h});
    m.faces = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
               {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
    return m;
}

/// Unit icosphere; vertices on the unit sphere, faces counter-clockwise seen from outside.
TriMesh make_icosphere(int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh m;
    m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                  {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& v : m.vertices) v = normalize(v);
    m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            auto it = midpoints.find(key);
            if (it != midpoints.end()) return it->second;
            const auto idx = static_cast<std::uint32_t>(m.vertices.size());
            m.vertices.push_back(normalize(m.vertices[a] + m.vertices[b]));
            midpoints.emplace(key, idx);
            return idx;
        };
        std::vector<Face> next;
        next.reserve(m.faces.size() * 4);
        for (const Face& f : m.faces) {
            const std::uint32_t a = midpoint(f[0], f[1]);
            const std::uint32_t b = midpoint(f[1], f[2]);
            const std::uint32_t c = midpoint(f[2], f[0]);
            next.push_back({f[0], a, c});
            next.push_back({f[1], b, a});
            next.push_back({f[2], c, b});
            next.push_back({a, b, c});
        }
        m.faces = std::move(next);
    }
    return m;
}

TriMesh make_sphere(const primitive::Sphere& s) {
    TriMesh m = make_icosphere(s.subdivisions);
    m.normals = m.vertices;
    for (Vec3& v : m.vertices) v = v * s.radius;
    return m;
}

TriMesh make_ellipsoid(const primitive::Ellipsoid& e) {
    TriMesh m = make_icosphere(e.subdivisions);
    const Vec3 r{e.rx, e.ry, e.rz};
    m.normals.reserve(m.vertices.size());
    for (Vec3& v : m.vertices) {
        m.normals.push_back(normalize(v / r));
        v = v * r;
    }
    return m;
}

TriMesh make_circle(const primitive::Circle& c) {
    TriMesh m;
    m.vertices.push_back({0, 0, 0});
    for (int i = 0; i < c.segments; ++i) {
        const double a = 2.0 * kPi * i / c.segments;
        m.vertices.push_back({c.radius * std::cos(a), c.radius * std::sin(a), 0});
    }
    const auto n = static_cast<std::uint32_t>(c.segments);
    for (std::uint32_t i = 0; i < n; ++i) m.faces.push_back({0, 1 + i, 1 + (i + 1) % n});
    return m;
}

TriMesh make_cylinder(const primitive::Cylinder& c) {
    TriMesh m;
    const auto n = static_cast<std::uint32_t>(c.segments);
    const double h = 0.5 * c.height;
    for (std::uint32_t i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * i / n;
        m.vertices.push_back({c.radius * std::cos(a), c.radius * std::sin(a), -h});
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        const double a = 2.0 * kPi * i / n;
        m.vertices.push_back({c.radius * std::cos(a), c.radius * std::sin(a), h});
    }
    const std::uint32_t bottom = 2 * n, top = 2 * n + 1;
    m.vertices.push_back({0, 0, -h});
    m.vertices.push_back({0, 0, h});
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t j = (i + 1) % n;
        m.faces.push_back({i, j, n + j});
        m.faces.push_back({i, n + j, n + i});
        m.faces.push_back({bottom, j, i});
        m.faces.push_back({top, n + i, n + j});
    }
    return m;
}

TriMesh make_plane(const primitive::Plane& p) {
    const double h = 0.5 * p.size;
    TriMesh m;
    m.vertices = {{-h, -h, 0}, {h, -h, 0}, {h, h, 0}, {-h, h, 0}};
    m.faces = {{0, 1, 2}, {0, 2, 3}};
    m.normals.assign(4, Vec3{0, 0, 1});
    return m;
}

Vec3 bezier_tangent(const std::vector<Vec3>& cp, double t) {
    std::vector<Vec3> d;
    d.reserve(cp.size() - 1);
    for (std::size_t i = 0; i + 1 < cp.size(); ++i) d.push_back(cp[i + 1] - cp[i]);
    return d.size() == 1 ? d[0] : sample_bezier(d, t);
}

TriMesh make_bezier(const primitive::Bezier& b) {
    const int rings = b.samples;
    std::vector<Vec3> centers(rings), tangents(rings);
    Vec3 last_tangent{0, 0, 1};
    for (int i = 0; i < rings; ++i) {
        const double t = static_cast<double>(i) / (rings - 1);
        centers[i] = sample_bezier(b.control_points, t);
        Vec3 tan = bezier_tangent(b.control_points, t);
        const double len = length(tan);
        tan = len > 1e-12 ? tan / len : last_tangent;
        tangents[i] = last_tangent = tan;
    }
    // Rotation-minimizing frames by double reflection (Wang et al. 2008).
    std::vector<Vec3> normals(rings);
    Vec3 unused;
    orthonormal_basis(tangents[0], normals[0], unused);
    for (int i = 0; i + 1 < rings; ++i) {
        const Vec3 v1 = centers[i + 1] - centers[i];
        const double c1 = dot(v1, v1);
        Vec3 r_l = normals[i], t_l = tangents[i];
        if (c1 > 0) {
            r_l = normals[i] - v1 * (2.0 / c1 * dot(v1, normals[i]));
            t_l = tangents[i] - v1 * (2.0 / c1 * dot(v1, tangents[i]));
        }
        const Vec3 v2 = tangents[i + 1] - t_l;
        const double c2 = dot(v2, v2);
        Vec3 n = c2 > 0 ? r_l - v2 * (2.0 / c2 * dot(v2, r_l)) : r_l;
        n = n - tangents[i + 1] * dot(n, tangents[i + 1]);
        normals[i + 1] = normalize(n);
    }
    TriMesh m;
    const auto sides = static_cast<std::uint32_t>(b.sides);
    for (int i = 0; i < rings; ++i) {
        const Vec3 bin = cross(tangents[i], normals[i]);
        for (std::uint32_t s = 0; s < sides; ++s) {
            const double a = 2.0 * kPi * s / sides;
            const Vec3 dir = normals[i] * std::cos(a) + bin * std::sin(a);
            m.vertices.push_back(centers[i] + dir * b.bevel_radius);
            m.normals.push_back(normalize(dir));
        }
    }
    for (std::uint32_t i = 0; i + 1 < static_cast<std::uint32_t>(rings); ++i) {
        for (std::uint32_t s = 0; s < sides; ++s) {
            const std::uint32_t s1 = (s + 1) % sides;
            const std::uint32_t a = i * sides + s, bb = i * sides + s1;
            const std::uint32_t c = (i + 1) * sides + s1, d = (i + 1) * sides + s;
            m.faces.push_back({a, bb, c});
            m.faces.push_back({a, c, d});
        }
    }
    return m;
}

struct TessellateVisitor {
    TriMesh operator()(const primitive::Cube& c) const { return make_cube(c.size); }
    TriMesh operator()(const primitive::Circle& c) const { return make_circle(c); }
    TriMesh operator()(const primitive::Cylinder& c) const { return make_cylinder(c); }
    TriMesh operator()(const primitive::Plane& p) const { return make_plane(p); }
    TriMesh operator()(const primitive::Ellipsoid& e) const { return make_ellipsoid(e); }
    TriMesh operator()(const primitive::Sphere& s) const { return make_sphere(s); }
    TriMesh operator()(const primitive::Bezier& b) const { return make_bezier(b); }
};

}  // namespace

const char* primitive_kind(const PrimitiveSpec& spec) { return std::visit(KindVisitor{}, spec); }

void validate_primitive(const PrimitiveSpec& spec) { std::visit(ValidateVisitor{}, spec); }

TriMesh tessellate(const PrimitiveSpec& spec) {
    validate_primitive(spec);
    return std::visit(TessellateVisitor{}, spec);
}

Vec3 sample_bezier(const std::vector<Vec3>& control_points, double t) {
    if (control_points.empty()) return {};
    std::vector<Vec3> p = control_points;
    for (std::size_t level = p.size() - 1; level > 0; --level)
        for (std::size_t i = 0; i < level; ++i) p[i] = p[i] * (1.0 - t) + p[i + 1] * t;
    return p[0];
}

}  // namespace scirender
