#include <cmath>
#include <random>

#include "doctest.h"
#include "scirender/error.hpp"
#include "scirender/lights.hpp"
#include "scirender/rotation.hpp"

using namespace scirender;

namespace {

double irradiance(const Light& l, const Vec3& p, const Vec3& n, const Vec2& u = {0.5, 0.5}) {
    const LightSample s = sample_direct(l, p, n, u);
    if (!s.valid) return 0;
    return s.radiance_over_pdf.y * std::max(0.0, dot(s.direction, n));
}

// Irradiance at the origin (normal +Z) from a downward square emitter of
// radiance L, side s, centered at height h, by midpoint quadrature.
double square_irradiance_quadrature(double L, double s, double h, const Vec3& c) {
    const int N = 600;
    const double dA = (s / N) * (s / N);
    double e = 0;
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
            const Vec3 q{c.x - s / 2 + (i + 0.5) * s / N, c.y - s / 2 + (j + 0.5) * s / N, h};
            const double r2 = length_squared(q);
            const double cos_r = q.z / std::sqrt(r2);
            e += L * cos_r * cos_r / r2 * dA;
        }
    return e;
}

}  // namespace

TEST_CASE("point light irradiance follows inverse square") {
    PointLight l;
    l.strength = 4 * kPi;
    l.pose.position = {0, 0, 1};
    CHECK(irradiance(l, {0, 0, 0}, {0, 0, 1}) == doctest::Approx(1).epsilon(1e-12));
    l.pose.position = {0, 0, 2};
    CHECK(irradiance(l, {0, 0, 0}, {0, 0, 1}) == doctest::Approx(0.25).epsilon(1e-12));
    const LightSample s = sample_direct(l, {0, 0, 0}, {0, 0, 1}, {0.1, 0.9});
    CHECK(s.pdf == 0);
    CHECK(s.distance == doctest::Approx(2));
    CHECK(s.direction == Vec3{0, 0, 1});
    CHECK(is_delta_light(l));
}

TEST_CASE("light output is linear in strength and color") {
    PointLight a;
    a.pose.position = {1, 2, 3};
    a.color = {1, 0.5, 0.25};
    PointLight b = a;
    b.strength = a.strength * 3;
    const auto sa = sample_direct(a, {0, 0, 0}, {0, 0, 1}, {0.5, 0.5});
    const auto sb = sample_direct(b, {0, 0, 0}, {0, 0, 1}, {0.5, 0.5});
    CHECK(sb.radiance_over_pdf.x == doctest::Approx(3 * sa.radiance_over_pdf.x).epsilon(1e-12));
    CHECK(sa.radiance_over_pdf.y == doctest::Approx(0.5 * sa.radiance_over_pdf.x).epsilon(1e-12));
    CHECK(sa.radiance_over_pdf.z == doctest::Approx(0.25 * sa.radiance_over_pdf.x).epsilon(1e-12));
}

TEST_CASE("directional light") {
    DirectionalLight l;
    l.strength = 3;
    l.pose.rotation = to_quaternion(AxisAngle{{1, 0, 0}, 0.0});
    const LightSample s = sample_direct(l, {5, 5, 5}, {0, 0, 1}, {0.5, 0.5});
    CHECK(s.valid);
    CHECK(std::isinf(s.distance));
    CHECK(length(s.direction - Vec3{0, 0, 1}) < 1e-12);
    CHECK(irradiance(l, {0, 0, 0}, {0, 0, 1}) == doctest::Approx(3));
}

TEST_CASE("spot light cone") {
    SpotLight l;
    l.strength = 4 * kPi;
    l.cone_angle = kPi / 4;
    l.blend = 0.2;
    l.pose.position = {0, 0, 1};
    CHECK(irradiance(l, {0, 0, 0}, {0, 0, 1}) == doctest::Approx(1).epsilon(1e-12));
    CHECK(irradiance(l, {2, 0, 0}, {0, 0, 1}) == 0.0);
    // Continuous across the blend region: no jump bigger than the local slope allows.
    double prev = irradiance(l, {0, 0, 0}, {0, 0, 1});
    const int steps = 4000;
    for (int i = 1; i <= steps; ++i) {
        const double angle = (kPi / 3) * i / steps;
        const Vec3 p{std::tan(angle), 0, 0};
        const double d2 = 1 + p.x * p.x;
        const double cur = irradiance(l, p, normalize(Vec3{0, 0, 1} - p)) * d2;
        if (i > 1) CHECK(std::abs(cur - prev) < 0.01);
        prev = cur;
    }
    CHECK(prev == 0.0);
}

TEST_CASE("cast_shadow controls shadow rays") {
    PointLight l;
    l.pose.position = {0, 0, 1};
    CHECK(sample_direct(l, {}, {0, 0, 1}, {0, 0}).needs_shadow_ray);
    l.cast_shadow = false;
    CHECK_FALSE(sample_direct(l, {}, {0, 0, 1}, {0, 0}).needs_shadow_ray);
    CHECK_FALSE(casts_shadow(l));
    AreaLight a;
    a.cast_shadow = false;
    CHECK_FALSE(casts_shadow(a));
}

TEST_CASE("area light irradiance matches quadrature") {
    for (const Vec3& c : {Vec3{0, 0, 1}, Vec3{0.7, -0.3, 1.5}}) {
        AreaLight l;
        l.strength = 5;
        l.size = 1;
        l.pose.position = c;
        const double L = l.strength / kPi;
        const double want = square_irradiance_quadrature(L, l.size, c.z, c);
        const int side = 64;
        double sum = 0;
        for (int j = 0; j < side; ++j)
            for (int i = 0; i < side; ++i)
                sum += irradiance(l, {0, 0, 0}, {0, 0, 1}, {(i + 0.5) / side, (j + 0.5) / side});
        const double got = sum / (side * side);
        CHECK(std::abs(got - want) / want < 0.02);
    }
}

TEST_CASE("area light is one-sided and hittable") {
    AreaLight l;
    l.pose.position = {0, 0, 1};
    CHECK(irradiance(l, {0, 0, 2}, {0, 0, -1}) == 0.0);
    const auto hit = intersect_light(l, {0.1, 0.1, 0}, {0, 0, 1}, 10);
    REQUIRE(hit.has_value());
    CHECK(hit->t == doctest::Approx(1));
    CHECK(hit->radiance.x == doctest::Approx(l.strength / kPi));
    CHECK_FALSE(intersect_light(l, {0.1, 0.1, 2}, {0, 0, -1}, 10).has_value());
    CHECK_FALSE(intersect_light(l, {2, 0, 0}, {0, 0, 1}, 10).has_value());
}

TEST_CASE("background light") {
    BackgroundLight b{{0.5, 0.5, 0.5}, 2};
    CHECK(escape_radiance(b, {0, 1, 0}) == Vec3{1, 1, 1});
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    double sum = 0;
    const int N = 20000;
    for (int i = 0; i < N; ++i) sum += irradiance(b, {}, {0, 0, 1}, {u(rng), u(rng)});
    CHECK(sum / N == doctest::Approx(kPi).epsilon(0.01));
    CHECK(light_pose(Light{b}) == nullptr);
}

TEST_CASE("light validation") {
    PointLight p;
    p.strength = -1;
    CHECK_THROWS_AS(validate_light(p), Error);
    SpotLight s;
    s.blend = 1.5;
    CHECK_THROWS_AS(validate_light(s), Error);
    AreaLight a;
    a.size = 0;
    CHECK_THROWS_AS(validate_light(a), Error);
    CHECK(std::string(light_kind(Light{SpotLight{}})) == "spot");
}
