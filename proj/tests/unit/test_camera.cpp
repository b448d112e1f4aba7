#include <cmath>
#include <random>

#include "doctest.h"
#include "scirender/camera.hpp"
#include "scirender/error.hpp"
#include "scirender/rotation.hpp"

#include "../support/fixtures.hpp"

using namespace scirender;

TEST_CASE("perspective center ray looks down -Z") {
    const PerspectiveCamera cam{500, 640, 480, {}};
    const Ray r = generate_ray_continuous(cam, 320, 240);
    CHECK(r.origin == Vec3{0, 0, 0});
    CHECK(r.direction == Vec3{0, 0, -1});
    const Ray p = generate_ray(cam, 320, 240, {0, 0});
    CHECK(p.direction == Vec3{0, 0, -1});
}

TEST_CASE("field of view edges") {
    const PerspectiveCamera cam = PerspectiveCamera::from_fov(kPi / 2, 200, 100);
    CHECK(cam.focal_px == doctest::Approx(100));
    CHECK(cam.fov_x() == doctest::Approx(kPi / 2));
    const Ray right = generate_ray_continuous(cam, 200, 50);
    CHECK(right.direction.x / -right.direction.z == doctest::Approx(1).epsilon(1e-12));
    const Ray left = generate_ray_continuous(cam, 0, 50);
    CHECK(left.direction.x / -left.direction.z == doctest::Approx(-1).epsilon(1e-12));
    // Image rows grow downward.
    CHECK(generate_ray_continuous(cam, 100, 0).direction.y > 0);
    CHECK_THROWS_AS(PerspectiveCamera::from_fov(kPi, 10, 10), Error);
}

TEST_CASE("orthographic pixel pitch") {
    const OrthographicCamera cam{4, 8, 6, {}};
    const Ray a = generate_ray(cam, 0, 0, {0.5, 0.5});
    const Ray b = generate_ray(cam, 1, 0, {0.5, 0.5});
    const Ray c = generate_ray(cam, 0, 1, {0.5, 0.5});
    CHECK(b.origin.x - a.origin.x == doctest::Approx(0.5));
    CHECK(a.origin.y - c.origin.y == doctest::Approx(0.5));
    CHECK(a.origin == Vec3{-1.75, 1.25, 0});
    CHECK(a.direction == b.direction);
    CHECK(a.direction == Vec3{0, 0, -1});
}

TEST_CASE("generate_ray bounds") {
    const PerspectiveCamera cam{100, 4, 3, {}};
    CHECK_THROWS_AS(generate_ray(cam, 4, 0, {0.5, 0.5}), Error);
    CHECK_THROWS_AS(generate_ray(cam, 0, -1, {0.5, 0.5}), Error);
    try {
        generate_ray(cam, 0, 3, {0, 0});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::bounds_error);
    }
    CHECK_NOTHROW(generate_ray(cam, 3, 2, {0.999, 0.999}));
}

TEST_CASE("project inverts generate_ray (property)") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0, 1), dist(0.5, 50);
    for (int i = 0; i < 500; ++i) {
        Pose pose{{u(rng) * 10 - 5, u(rng) * 10 - 5, u(rng) * 10 - 5}, fixtures::random_quat(rng)};
        const Camera cams[] = {PerspectiveCamera{300 + 500 * u(rng), 320, 240, pose},
                               OrthographicCamera{1 + 5 * u(rng), 320, 240, pose}};
        for (const Camera& cam : cams) {
            const double px = u(rng) * 320, py = u(rng) * 240;
            const Ray r = generate_ray_continuous(cam, px, py);
            CHECK(std::abs(length(r.direction) - 1) < 1e-12);
            const auto back = project(cam, r.origin + r.direction * dist(rng));
            REQUIRE(back.has_value());
            CHECK(std::abs(back->x - px) < 1e-7);
            CHECK(std::abs(back->y - py) < 1e-7);
        }
    }
}

TEST_CASE("points behind a perspective camera do not project") {
    const PerspectiveCamera cam{100, 10, 10, {}};
    CHECK_FALSE(project(cam, {0, 0, 1}).has_value());
    CHECK_FALSE(project(cam, {0, 0, 0}).has_value());
    CHECK(project(cam, {0, 0, -1}).has_value());
    const OrthographicCamera ortho{2, 10, 10, {}};
    CHECK(project(ortho, {0, 0, 1}).has_value());
}

TEST_CASE("with_resolution keeps the view") {
    const Camera cam = PerspectiveCamera::from_fov(1.0, 640, 480);
    const Camera half = with_resolution(cam, 320, 240);
    CHECK(std::get<PerspectiveCamera>(half).fov_x() == doctest::Approx(1.0));
    const Ray a = generate_ray_continuous(cam, 640, 0);
    const Ray b = generate_ray_continuous(half, 320, 0);
    CHECK(length(a.direction - b.direction) < 1e-12);
    const Camera o = with_resolution(OrthographicCamera{3, 10, 10, {}}, 20, 5);
    CHECK(std::get<OrthographicCamera>(o).ortho_scale == 3);
    CHECK(camera_width(o) == 20);
}

TEST_CASE("look_at camera sees its target at the image center") {
    const Vec3 eye{3, -4, 2}, target{0.5, 0.5, 0};
    const PerspectiveCamera cam{400, 100, 80, {eye, look_at_rotation(eye, target)}};
    const auto c = project(cam, target);
    REQUIRE(c.has_value());
    CHECK(c->x == doctest::Approx(50));
    CHECK(c->y == doctest::Approx(40));
}

TEST_CASE("camera validation") {
    CHECK_THROWS_AS(validate_camera(PerspectiveCamera{0, 10, 10, {}}), Error);
    CHECK_THROWS_AS(validate_camera(PerspectiveCamera{10, 0, 10, {}}), Error);
    CHECK_THROWS_AS(validate_camera(OrthographicCamera{-1, 10, 10, {}}), Error);
    CHECK_NOTHROW(validate_camera(OrthographicCamera{1, 1, 1, {}}));
}
