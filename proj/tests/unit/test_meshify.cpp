#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "scirender/error.hpp"
#include "scirender/meshify.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

using namespace scirender;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::invalid_argument;
}

std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use(const TriMesh& m) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> use;
    for (const Face& f : m.faces)
        for (int s = 0; s < 3; ++s) ++use[std::minmax(f[s], f[(s + 1) % 3])];
    return use;
}

// Texel centers inside the face's atlas triangle, in image coordinates.
bool texel_in_face(const FacesUV& uv, std::size_t f, int R, int x, int y) {
    double xs[3], ys[3];
    for (int k = 0; k < 3; ++k) {
        xs[k] = uv.uv[f][k].x * R;
        ys[k] = (1 - uv.uv[f][k].y) * R;
    }
    return oracles::point_in_triangle_2d(xs, ys, x + 0.5, y + 0.5);
}

// Two unit quads far apart, each split into two faces.
TriMesh two_patches() {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {10, 0, 0}, {11, 0, 0}, {11, 1, 0}, {10, 1, 0}};
    m.faces = {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}, {4, 6, 7}};
    return m;
}

}  // namespace

TEST_CASE("ball pivoting: three points make one triangle") {
    const std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const std::vector<Vec3> nrm(3, Vec3{0, 0, 1});
    const TriMesh m = ball_pivot(pts, nrm, {1.0});
    REQUIRE(m.faces.size() == 1);
    CHECK(face_normal(m, 0).z == doctest::Approx(1));
}

TEST_CASE("ball pivoting: grid reconstruction") {
    const int n = 21;
    const auto pts = fixtures::grid(n, 0.05);
    const std::vector<Vec3> nrm(pts.size(), Vec3{0, 0, 1});
    const TriMesh m = ball_pivot(pts, nrm, {0.08});
    for (const auto& [e, c] : edge_use(m)) CHECK(c <= 2);
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        CHECK(face_normal(m, f).z > 0);
        CHECK(oracles::has_empty_ball(pts, m.faces[f], 0.08, 1e-9));
    }
    // Interior vertices have a closed fan: every incident edge is shared by two faces.
    const auto use = edge_use(m);
    for (int j = 1; j + 1 < n; ++j)
        for (int i = 1; i + 1 < n; ++i) {
            const auto v = static_cast<std::uint32_t>(j * n + i);
            int incident = 0;
            for (const auto& [e, c] : use)
                if (e.first == v || e.second == v) {
                    ++incident;
                    CHECK(c == 2);
                }
            CHECK(incident >= 4);
        }
    CHECK(surface_area(m) == doctest::Approx(1.0 * 1.0).epsilon(1e-9));
}

TEST_CASE("ball pivoting: sphere cloud satisfies the empty-ball property") {
    const auto pts = fixtures::fibonacci_sphere(400);
    const auto radii = default_bpa_radii(pts);
    REQUIRE(radii.size() == 3);
    const double s = mean_nearest_spacing(pts);
    CHECK(radii[0] == doctest::Approx(s));
    CHECK(radii[2] == doctest::Approx(2 * s));
    const TriMesh m = ball_pivot(pts, pts, radii);
    CHECK(m.faces.size() > 600);
    for (const auto& [e, c] : edge_use(m)) CHECK(c <= 2);
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        bool ok = false;
        for (double r : radii) ok = ok || oracles::has_empty_ball(pts, m.faces[f], r, 1e-9);
        CHECK(ok);
        CHECK(dot(face_normal(m, f), m.vertices[m.faces[f][0]]) > 0);
    }
}

TEST_CASE("ball pivoting: tiny ball finds nothing") {
    const auto pts = fixtures::grid(5, 0.1);
    const std::vector<Vec3> nrm(pts.size(), Vec3{0, 0, 1});
    CHECK(code_of([&] { ball_pivot(pts, nrm, {0.04}); }) == ErrorCode::empty_reconstruction);
    CHECK(code_of([&] { ball_pivot(pts, nrm, {0.2, 0.1}); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { ball_pivot(pts, {{0, 0, 1}}, {0.2}); }) == ErrorCode::invalid_argument);
}

TEST_CASE("simplify icosphere") {
    const TriMesh sphere = tessellate(primitive::Sphere{1, 3});
    REQUIRE(sphere.faces.size() == 1280);
    const SimplifyResult r = simplify_mesh(sphere, 320);
    CHECK(r.reached_target);
    CHECK(r.mesh.faces.size() <= 320);
    for (const Face& f : r.mesh.faces)
        for (int k = 0; k < 3; ++k) CHECK(std::abs(length(r.mesh.vertices[f[k]]) - 1) < 0.02);
    for (std::size_t f = 0; f < r.mesh.faces.size(); ++f) CHECK(face_area(r.mesh, f) > 0);
    for (const auto& [e, c] : edge_use(r.mesh)) CHECK(c == 2);
}

TEST_CASE("simplify plane keeps z = 0 exactly") {
    const TriMesh g = fixtures::grid_mesh(12, 0.1);
    const SimplifyResult r = simplify_mesh(g, 40);
    CHECK(r.mesh.faces.size() <= 40);
    for (const Face& f : r.mesh.faces)
        for (int k = 0; k < 3; ++k) CHECK(r.mesh.vertices[f[k]].z == 0.0);
    for (std::size_t f = 0; f < r.mesh.faces.size(); ++f) CHECK(face_normal(r.mesh, f).z > 0);
}

TEST_CASE("simplify no-op and invalid target") {
    const TriMesh g = fixtures::grid_mesh(6, 0.1);
    const SimplifyResult r = simplify_mesh(g, g.faces.size());
    CHECK(r.mesh == g);
    CHECK(r.reached_target);
    CHECK(code_of([&] { simplify_mesh(g, 3); }) == ErrorCode::invalid_target);
}

TEST_CASE("atlas: two faces share one cell with the gap") {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {3, 0, 0}, {4, 0, 0}, {3, 2, 0}};
    m.faces = {{0, 1, 2}, {3, 4, 5}};
    const FacesUV uv = build_face_atlas(m, 64, 2);
    REQUIRE(uv.uv.size() == 2);
    CHECK(oracles::check_atlas(uv, 64, 2) == "");
    const AtlasLayout l = atlas_layout(2, 64, 2);
    CHECK(l.cells_per_side == 1);
}

TEST_CASE("atlas: capacity boundary") {
    for (std::size_t faces : {1u, 2u, 3u, 7u, 50u, 333u}) {
        for (int gap : {1, 2, 3}) {
            const int R = minimal_atlas_resolution(faces, gap);
            CHECK_NOTHROW(atlas_layout(faces, R, gap));
            try {
                atlas_layout(faces, R - 1, gap);
                FAIL("expected atlas_capacity");
            } catch (const Error& e) {
                CHECK(e.code() == ErrorCode::atlas_capacity);
                CHECK(std::string(e.what()).find(std::to_string(R)) != std::string::npos);
            }
            const TriMesh soup = fixtures::random_soup(faces, 7 + faces);
            CHECK(oracles::check_atlas(build_face_atlas(soup, R, gap), R, gap) == "");
        }
    }
}

TEST_CASE("atlas: uv range and disjointness on random soups") {
    for (int trial = 0; trial < 6; ++trial) {
        const TriMesh soup = fixtures::random_soup(40 + 37 * trial, 100 + trial);
        const int gap = 1 + trial % 3;
        const int R = std::max(minimal_atlas_resolution(soup.faces.size(), gap), 128);
        CHECK(oracles::check_atlas(build_face_atlas(soup, R, gap), R, gap) == "");
    }
}

TEST_CASE("projection examples") {
    TriMesh big;
    big.vertices = {{-10, -10, 0}, {10, -10, 0}, {0, 10, 0}};
    big.faces = {{0, 1, 2}};
    auto p = project_points_to_mesh({{0, 0, 0.75}, {10, -10, 0}}, big);
    CHECK(p[0].distance == doctest::Approx(0.75));
    CHECK(p[0].bary.x > 0);
    CHECK(p[0].bary.y > 0);
    CHECK(p[0].bary.z > 0);
    CHECK(p[1].distance == 0.0);
    CHECK(p[1].bary == Vec3{0, 1, 0});
    CHECK(p[1].foot == Vec3{10, -10, 0});
}

TEST_CASE("projection matches brute force") {
    const TriMesh m = fixtures::random_soup(300, 61);
    std::mt19937_64 rng(62);
    std::uniform_real_distribution<double> u(-7, 7);
    std::vector<Vec3> pts;
    for (int i = 0; i < 3000; ++i) pts.push_back({u(rng), u(rng), u(rng)});
    const auto proj = project_points_to_mesh(pts, m);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double best = 1e300;
        std::size_t bf = 0;
        for (std::size_t f = 0; f < m.faces.size(); ++f) {
            const Face& t = m.faces[f];
            const double d = oracles::point_triangle_distance(pts[i], m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
            if (d < best) best = d, bf = f;
        }
        CHECK(std::abs(proj[i].distance - best) < 1e-9);
        if (std::abs(proj[i].distance - best) < 1e-9 && proj[i].face != bf) {
            const Face& t = m.faces[proj[i].face];
            CHECK(std::abs(oracles::point_triangle_distance(pts[i], m.vertices[t[0]], m.vertices[t[1]],
                                                            m.vertices[t[2]]) - best) < 1e-9);
        }
        const Vec3& b = proj[i].bary;
        CHECK(b.x + b.y + b.z == doctest::Approx(1));
        const Face& t = m.faces[proj[i].face];
        const Vec3 foot = m.vertices[t[0]] * b.x + m.vertices[t[1]] * b.y + m.vertices[t[2]] * b.z;
        CHECK(length(foot - proj[i].foot) < 1e-9);
    }
}

TEST_CASE("bake: constant colors") {
    const TriMesh m = fixtures::grid_mesh(5, 0.25);
    const int R = 128;
    const FacesUV uv = build_face_atlas(m, R, 2);
    std::vector<Vec3> pts;
    for (const Vec3& v : fixtures::grid(9, 0.125)) pts.push_back(v);
    const std::vector<Vec4> colors(pts.size(), Vec4{0.2, 0.4, 0.6, 1});
    const Image tex = bake_texture(m, uv, colors, project_points_to_mesh(pts, m), 4, R);
    int covered = 0;
    for (std::size_t f = 0; f < m.faces.size(); ++f)
        for (int y = 0; y < R; ++y)
            for (int x = 0; x < R; ++x)
                if (texel_in_face(uv, f, R, x, y)) {
                    ++covered;
                    const Vec4 c = tex.at(x, y);
                    CHECK(std::abs(c.x - 0.2) < 1e-6);
                    CHECK(std::abs(c.z - 0.6) < 1e-6);
                }
    CHECK(covered > 0);
    CHECK(code_of([&] { bake_texture(m, uv, {}, {}, 4, R); }) == ErrorCode::empty_bake);
}

TEST_CASE("bake: separated clusters do not mix") {
    const TriMesh m = two_patches();
    const int R = 64;
    const FacesUV uv = build_face_atlas(m, R, 2);
    std::vector<Vec3> pts;
    std::vector<Vec4> colors;
    for (const Vec3& v : fixtures::grid(6, 0.2)) {
        pts.push_back(v + Vec3{0.5, 0.5, 0});
        colors.push_back({1, 0, 0, 1});
        pts.push_back(v + Vec3{10.5, 0.5, 0});
        colors.push_back({0, 0, 1, 1});
    }
    const Image tex = bake_texture(m, uv, colors, project_points_to_mesh(pts, m), 4, R);
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const Vec4 want = f < 2 ? Vec4{1, 0, 0, 1} : Vec4{0, 0, 1, 1};
        for (int y = 0; y < R; ++y)
            for (int x = 0; x < R; ++x)
                if (texel_in_face(uv, f, R, x, y)) {
                    const Vec4 c = tex.at(x, y);
                    CHECK(std::abs(c.x - want.x) <= 1.0 / 255);
                    CHECK(std::abs(c.z - want.z) <= 1.0 / 255);
                }
    }
}

TEST_CASE("bake: dilation carries the border color into the gap") {
    const TriMesh m = two_patches();
    const int R = 64;
    const FacesUV uv = build_face_atlas(m, R, 2);
    std::vector<Vec3> pts;
    std::vector<Vec4> colors;
    for (const Vec3& v : fixtures::grid(6, 0.2)) {
        pts.push_back(v + Vec3{0.5, 0.5, 0});
        colors.push_back({1, 0, 0, 1});
        pts.push_back(v + Vec3{10.5, 0.5, 0});
        colors.push_back({0, 0, 1, 1});
    }
    const Image tex = bake_texture(m, uv, colors, project_points_to_mesh(pts, m), 4, R);
    // Texels outside every triangle whose 8-neighbors touch exactly one patch.
    int checked = 0;
    for (int y = 1; y + 1 < R; ++y)
        for (int x = 1; x + 1 < R; ++x) {
            bool inside = false;
            for (std::size_t f = 0; f < 4; ++f) inside = inside || texel_in_face(uv, f, R, x, y);
            if (inside) continue;
            std::set<int> patches;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    for (std::size_t f = 0; f < 4; ++f)
                        if (texel_in_face(uv, f, R, x + dx, y + dy)) patches.insert(f < 2 ? 0 : 1);
            if (patches.size() != 1) continue;
            ++checked;
            const Vec4 c = tex.at(x, y);
            if (*patches.begin() == 0)
                CHECK(c.x == doctest::Approx(1).epsilon(1e-6));
            else
                CHECK(c.z == doctest::Approx(1).epsilon(1e-6));
        }
    CHECK(checked > 20);
}

TEST_CASE("bake is invariant to point order") {
    const TriMesh m = fixtures::grid_mesh(4, 0.5);
    const int R = 64;
    const FacesUV uv = build_face_atlas(m, R, 1);
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Vec3> pts;
    std::vector<Vec4> colors;
    for (int i = 0; i < 200; ++i) {
        pts.push_back({u(rng) * 1.5 - 0.75, u(rng) * 1.5 - 0.75, 0});
        colors.push_back({u(rng), u(rng), u(rng), 1});
    }
    const Image a = bake_texture(m, uv, colors, project_points_to_mesh(pts, m), 4, R);
    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Vec3> p2;
    std::vector<Vec4> c2;
    for (std::size_t i : perm) {
        p2.push_back(pts[i]);
        c2.push_back(colors[i]);
    }
    const Image b = bake_texture(m, uv, c2, project_points_to_mesh(p2, m), 4, R);
    for (std::size_t i = 0; i < a.pixels.size(); ++i) CHECK(std::abs(a.pixels[i] - b.pixels[i]) < 1e-6);
}

TEST_CASE("meshify pipeline") {
    const auto pts = fixtures::fibonacci_sphere(600);
    MeshifyConfig cfg;
    cfg.target_faces = 300;
    cfg.texture_resolution = 256;
    const MeshifyResult with = meshify_pc(pts, {{0.3, 0.6, 0.9, 1}}, pts, cfg);
    CHECK(with.log.stages == std::vector<std::string>{"radii", "ball_pivot", "simplify", "atlas", "project", "bake"});
    CHECK_FALSE(with.log.normals_estimated);
    CHECK(with.textured.mesh.faces.size() <= 300);
    CHECK(with.textured.uv.uv.size() == with.textured.mesh.faces.size());
    CHECK(oracles::check_atlas(with.textured.uv, 256, cfg.gap_px) == "");
    CHECK(with.log.atlas_occupancy > 0);

    const MeshifyResult without = meshify_pc(pts, {{0.3, 0.6, 0.9, 1}}, std::nullopt, cfg);
    CHECK(without.log.stages.front() == "normals");
    CHECK(without.log.normals_estimated);
    const TriMesh& out = without.textured.mesh;
    double outward = 0;
    for (std::size_t f = 0; f < out.faces.size(); ++f) outward += dot(face_normal(out, f), out.vertices[out.faces[f][0]]) > 0;
    CHECK(outward / out.faces.size() > 0.99);
}

TEST_CASE("meshify errors carry their stage") {
    try {
        meshify_pc({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{1, 1, 1, 1}}, std::nullopt, {});
        FAIL("expected insufficient_points");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::insufficient_points);
        CHECK(e.stage() == "input");
    }
    const auto pts = fixtures::fibonacci_sphere(50);
    try {
        meshify_pc(pts, {}, pts, {});
        FAIL("expected bind_error");
    } catch (const Error& e) {
        CHECK(e.stage() == "bake");
        CHECK(std::string(e.what()).find("bake requires colors") != std::string::npos);
    }
    MeshifyConfig tiny;
    tiny.bpa_radii = {1e-4};
    try {
        meshify_pc(pts, {{1, 1, 1, 1}}, pts, tiny);
        FAIL("expected empty_reconstruction");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::empty_reconstruction);
        CHECK(e.stage() == "ball_pivot");
    }
    MeshifyConfig small_tex;
    small_tex.texture_resolution = 8;
    try {
        meshify_pc(pts, {{1, 1, 1, 1}}, pts, small_tex);
        FAIL("expected atlas_capacity");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::atlas_capacity);
        CHECK(e.stage() == "atlas");
    }
}
