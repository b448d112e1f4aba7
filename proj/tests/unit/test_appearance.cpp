#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "doctest.h"
#include "scirender/appearance.hpp"
#include "scirender/error.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

using namespace scirender;

namespace {

TriMesh unit_triangle() {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.faces = {{0, 1, 2}};
    return m;
}

Vec3 hemisphere_dir(std::mt19937_64& rng, const Vec3& n) {
    for (;;) {
        const Vec3 d = fixtures::random_unit(rng);
        const double c = dot(d, n);
        if (c > 1e-3) return d;
        if (c < -1e-3) return -d;
    }
}

Image checker(int size) {
    Image img(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double c = ((x + y) % 2 == 0) ? 1.0 : 0.0;
            img.set(x, y, {c, c, c, 1});
        }
    return img;
}

}  // namespace

TEST_CASE("vertex colors interpolate barycentrically") {
    const TriMesh m = unit_triangle();
    const VertexColors vc{{{1, 0, 0, 1}, {0, 1, 0, 1}, {0, 0, 1, 1}}, 4};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 500; ++i) {
        double a = u(rng), b = u(rng);
        if (a + b > 1) a = 1 - a, b = 1 - b;
        const Vec3 bary{1 - a - b, a, b};
        const Vec4 c = shade_color(m, 0, bary, vc);
        CHECK(std::abs(c.x - bary.x) < 1e-12);
        CHECK(std::abs(c.y - bary.y) < 1e-12);
        CHECK(std::abs(c.z - bary.z) < 1e-12);
        CHECK(c.w == doctest::Approx(1));
    }
    CHECK(shade_color(m, 0, {1, 0, 0}, vc) == Vec4{1, 0, 0, 1});
    CHECK(shade_color(m, 0, {0.3, 0.3, 0.4}, UniformColor{{0.1, 0.2, 0.3, 0.4}}) == Vec4{0.1, 0.2, 0.3, 0.4});
}

TEST_CASE("binding checks") {
    const TriMesh m = unit_triangle();
    CHECK_THROWS_AS(check_binding(VertexColors{{{1, 0, 0, 1}}, 4}, m), Error);
    CHECK_THROWS_AS(check_binding(VertexColors{{{1, 0, 0, 1}, {0, 1, 0, 1}, {0, 0, 1.5, 1}}, 4}, m), Error);
    CHECK_NOTHROW(check_binding(VertexColors{{{1, 0, 0, 1}, {0, 1, 0, 1}, {0, 0, 1, 1}}, 3}, m));
    auto img = std::make_shared<Image>(checker(4));
    CHECK_THROWS_AS(check_binding(TextureColors{img, VertexUV{{{0, 0}}}}, m), Error);
    CHECK_THROWS_AS(check_binding(TextureColors{img, FacesUV{}}, m), Error);
    CHECK_NOTHROW(check_binding(TextureColors{img, FacesUV{{{Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}}}}}, m));
    try {
        check_binding(UniformColor{{2, 0, 0, 1}}, m);
        FAIL("expected bind_error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::bind_error);
    }
}

TEST_CASE("checker texture at texel centers") {
    const Image img = checker(8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            const Vec2 uv{(x + 0.5) / 8, 1 - (y + 0.5) / 8};
            CHECK(sample_texture(img, uv) == img.at(x, y));
        }
}

TEST_CASE("sample_texture matches the bilinear oracle with wrapping") {
    Image img(5, 3);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0, 1), wide(-3, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 5; ++x) img.set(x, y, {u(rng), u(rng), u(rng), u(rng)});
    for (int i = 0; i < 2000; ++i) {
        const double s = wide(rng), t = wide(rng);
        const Vec4 got = sample_texture(img, {s, t});
        const Vec4 want = oracles::bilinear_repeat(img, s, t);
        CHECK(std::abs(got.x - want.x) < 1e-9);
        CHECK(std::abs(got.w - want.w) < 1e-9);
        // Integer shifts in uv do not change the result.
        const Vec4 shifted = sample_texture(img, {s + 2, t - 1});
        CHECK(std::abs(shifted.y - got.y) < 1e-9);
    }
    CHECK_THROWS_AS(sample_texture(Image{}, {0, 0}), Error);
}

TEST_CASE("textured triangle reads through uv") {
    const TriMesh m = unit_triangle();
    auto img = std::make_shared<const Image>(checker(2));
    const TextureColors tc{img, VertexUV{{{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}}}};
    CHECK(shade_color(m, 0, {1, 0, 0}, tc) == img->at(0, 1));
    CHECK(shade_color(m, 0, {0, 1, 0}, tc) == img->at(1, 1));
    CHECK(shade_color(m, 0, {0, 0, 1}, tc) == img->at(0, 0));
}

TEST_CASE("file texture loads lazily and once") {
    std::atomic<int> calls{0};
    auto tex = std::make_shared<const FileTexture>("never/read.png", [&](const std::string&) {
        ++calls;
        return checker(2);
    });
    const TriMesh m = unit_triangle();
    const FileTextureColors fc{tex, VertexUV{{{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}}}};
    CHECK_FALSE(tex->loaded());
    CHECK(calls == 0);
    std::vector<std::thread> pool;
    for (int t = 0; t < 8; ++t)
        pool.emplace_back([&] {
            for (int i = 0; i < 100; ++i) shade_color(m, 0, {1, 0, 0}, fc);
        });
    for (auto& t : pool) t.join();
    CHECK(calls == 1);
    CHECK(tex->loaded());

    const FileTexture missing("/nonexistent/dir/tex.png");
    CHECK_THROWS_AS(missing.image(), Error);
}

TEST_CASE("lambertian principled is base over pi") {
    PrincipledMaterial mat;
    mat.specular = 0;
    mat.metallic = 0;
    std::mt19937_64 rng(13);
    const Vec3 base{0.2, 0.5, 0.9};
    for (int i = 0; i < 300; ++i) {
        const Vec3 n = fixtures::random_unit(rng);
        const Vec3 wo = hemisphere_dir(rng, n), wi = hemisphere_dir(rng, n);
        const Vec3 f = eval_bsdf(mat, n, wo, wi, base);
        for (int c = 0; c < 3; ++c) CHECK(std::abs(f[c] - base[c] / kPi) < 1e-12);
    }
}

TEST_CASE("bsdf reciprocity") {
    std::mt19937_64 rng(14);
    const std::vector<Material> mats = {PrincipledMaterial{}, metal_material(), plastic_material(),
                                        GlossyMaterial{}, GlossyMaterial{0.7}, plastic_wireframe_material()};
    for (const Material& mat : mats)
        for (int i = 0; i < 300; ++i) {
            const Vec3 n = fixtures::random_unit(rng);
            const Vec3 a = hemisphere_dir(rng, n), b = hemisphere_dir(rng, n);
            const Vec3 fab = eval_bsdf(mat, n, a, b, {0.7, 0.6, 0.5});
            const Vec3 fba = eval_bsdf(mat, n, b, a, {0.7, 0.6, 0.5});
            for (int c = 0; c < 3; ++c) CHECK(std::abs(fab[c] - fba[c]) <= 1e-9 * (1 + std::abs(fab[c])));
        }
}

TEST_CASE("white furnace: no material reflects more than it receives") {
    const std::vector<Material> mats = {PrincipledMaterial{}, metal_material(), plastic_material(),
                                        GlossyMaterial{0.05}, GlossyMaterial{0.5}, GlossyMaterial{1.0}};
    const Vec3 n{0, 0, 1};
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(0, 1);
    for (const Material& mat : mats)
        for (double theta : {0.0, 0.5, 1.0, 1.4}) {
            const Vec3 wo{std::sin(theta), 0, std::cos(theta)};
            const int N = 20000;
            double sum = 0;
            for (int i = 0; i < N; ++i) {
                const BsdfSample s = sample_bsdf(mat, n, wo, {1, 1, 1}, {u(rng), u(rng)}, u(rng));
                if (s.valid) sum += s.weight.y;
            }
            CHECK(sum / N <= 1.02);
        }
}

TEST_CASE("sample weight matches eval cos over pdf") {
    const Vec3 n{0, 0, 1};
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(0, 1);
    for (const Material& mat : {Material{PrincipledMaterial{}}, Material{GlossyMaterial{0.4}}}) {
        const Vec3 wo = normalize(Vec3{0.3, -0.2, 1});
        for (int i = 0; i < 500; ++i) {
            const BsdfSample s = sample_bsdf(mat, n, wo, {0.5, 0.5, 0.5}, {u(rng), u(rng)}, u(rng));
            if (!s.valid) continue;
            const double pdf = pdf_bsdf(mat, n, wo, s.wi, {0.5, 0.5, 0.5});
            CHECK(pdf == doctest::Approx(s.pdf).epsilon(1e-9));
            const Vec3 f = eval_bsdf(mat, n, wo, s.wi, {0.5, 0.5, 0.5});
            CHECK(s.weight.x == doctest::Approx(f.x * dot(n, s.wi) / s.pdf).epsilon(1e-9));
        }
    }
}

TEST_CASE("wireframe factor") {
    const Vec3 p0{0, 0, 0}, p1{1, 0, 0}, p2{0, 1, 0};
    CHECK(wireframe_factor(p0, p1, p2, {0.5, 0.5, 0}, 0.01) == 1.0);
    const Vec3 centroid{1.0 / 3, 1.0 / 3, 1.0 / 3};
    // Nearest edge to the centroid is the hypotenuse at (1/3)/sqrt(2).
    CHECK(wireframe_factor(p0, p1, p2, centroid, 0.4) == 0.0);
    CHECK(wireframe_factor(p0, p1, p2, centroid, 0.5) == 1.0);
    const TriMesh m = unit_triangle();
    CHECK(wireframe_factor(m, 0, {0.9, 0.05, 0.05}, 0.2) == 1.0);
    CHECK(wireframe_factor(m, 0, {0.5, 0.25, 0.25}, 0.2) == 0.0);
}

TEST_CASE("material validation and presets") {
    PrincipledMaterial bad;
    bad.roughness = 2;
    CHECK_THROWS_AS(validate_material(bad), Error);
    bad = {};
    bad.alpha = -0.1;
    CHECK_THROWS_AS(validate_material(bad), Error);
    CHECK_NOTHROW(validate_material(metal_wireframe_material(0.02, {1, 0, 0})));
    CHECK(metal_material().metallic == 1.0);
    CHECK(plastic_material().metallic == 0.0);
    CHECK(metal_wireframe_material().thickness == 0.01);
    CHECK(material_alpha(PrincipledMaterial{}) == 1.0);
}
