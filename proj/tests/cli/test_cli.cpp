#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "scirender/io.hpp"
#include "scirender/rotation.hpp"

#include "../support/fixtures.hpp"

using namespace scirender;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(const std::string& args, const fs::path& dir, const std::string& env = {}) {
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = env + " \"" SCIRENDER_CLI "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out.string());
    r.err = read_file(err.string());
    fs::remove(out);
    fs::remove(err);
    return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::size_t file_count(const fs::path& dir) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.is_regular_file();
    return n;
}

fs::path write_furnace(const fs::path& dir) {
    Scene s;
    s.add_light(BackgroundLight{{1, 1, 1}, 1.0});
    s.set_camera(PerspectiveCamera{20, 16, 12, {}});
    s.settings.width = 16;
    s.settings.height = 12;
    s.settings.samples_per_pixel = 4;
    const fs::path p = dir / "furnace.scene.json";
    save_scene(s, p.string());
    return p;
}

fs::path write_ball(const fs::path& dir) {
    Scene s;
    s.add_renderable(Primitive{primitive::Sphere{0.6, 3}, {}, {}});
    PointLight l;
    l.pose.position = {1, -2, 3};
    s.add_light(l);
    s.add_light(BackgroundLight{{0.3, 0.3, 0.3}, 1});
    const Vec3 eye{0, -4, 1};
    s.set_camera(PerspectiveCamera::from_fov(0.7, 24, 18, {eye, look_at_rotation(eye, {0, 0, 0})}));
    s.settings.width = 24;
    s.settings.height = 18;
    s.settings.samples_per_pixel = 4;
    const fs::path p = dir / "ball.scene.json";
    save_scene(s, p.string());
    return p;
}

fs::path write_sphere_cloud(const fs::path& dir, bool colors) {
    PlyData ply;
    for (const Vec3& p : fixtures::fibonacci_sphere(500)) {
        ply.vertices.push_back(p);
        ply.normals.push_back(p);
        if (colors) ply.colors.push_back({0.2, 0.4, 0.6, 1});
    }
    const fs::path p = dir / (colors ? "cloud.ply" : "plain.ply");
    write_ply(ply, p.string());
    return p;
}

fs::path write_plane_cloud(const fs::path& dir) {
    PlyData ply;
    for (const Vec3& p : fixtures::grid(8, 0.1)) {
        ply.vertices.push_back(p);
        ply.colors.push_back({1, 0, 0, 1});
    }
    const fs::path p = dir / "plane.ply";
    write_ply(ply, p.string(), PlyFormat::ascii);
    return p;
}

fs::path write_keypoints(const fs::path& dir) {
    Trajectory t;
    t.add_keypoint({0, {0, 0, 0}, {}});
    t.add_keypoint({1, {1, 2, 0}, to_quaternion(AxisAngle{{0, 0, 1}, 1})});
    const fs::path p = dir / "keys.keypoints.json";
    write_file(p.string(), keypoints_to_string(t));
    return p;
}

}  // namespace

TEST_CASE("help enumerates every flag") {
    const auto dir = fixtures::temp_dir("cli_help");
    const Run r = run("--help", dir);
    CHECK(r.code == 0);
    for (const char* token : {"render", "meshify", "trajectory", "pc-color", "--out", "--passes", "--samples",
                              "--resolution", "--seed", "--threads", "--out-mesh", "--out-texture", "--radii",
                              "--target-faces", "--tex-res", "--gap", "--bake-k", "--fps", "--camera", "--k",
                              "--back-color", "--back-alpha", "--stats-json"}) {
        CAPTURE(token);
        CHECK(r.out.find(token) != std::string::npos);
    }
    const Run sub = run("render --help", dir);
    CHECK(sub.code == 0);
    CHECK(sub.out.find("--resolution") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
    const auto dir = fixtures::temp_dir("cli_usage");
    CHECK(run("", dir).code == 2);
    CHECK(run("frobnicate", dir).code == 2);
    CHECK(run("render", dir).code == 2);
    CHECK(run("trajectory x.json", dir).code == 2);
}

TEST_CASE("render: furnace is white and writes all passes") {
    const auto dir = fixtures::temp_dir("cli_furnace");
    const fs::path scene = write_furnace(dir);
    const fs::path out = dir / "out";
    fs::create_directories(out);
    const Run r = run("render " + q(scene) + " --out " + q(out / "f"), dir);
    REQUIRE(r.code == 0);
    CHECK(file_count(out) == 3);
    const Image8 img = read_png((out / "f.png").string());
    CHECK(img.width == 16);
    CHECK(img.height == 12);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < img.data.size(); i += 4)
        bad += img.data[i] != 255 || img.data[i + 1] != 255 || img.data[i + 2] != 255;
    CHECK(bad == 0);
    CHECK(read_pfm((out / "f.depth.pfm").string()).width == 16);
    CHECK(read_png((out / "f.albedo.png").string()).channels == 3);
}

TEST_CASE("render: selected passes and overrides") {
    const auto dir = fixtures::temp_dir("cli_passes");
    const fs::path scene = write_ball(dir);
    const fs::path only = dir / "only";
    fs::create_directories(only);
    REQUIRE(run("render " + q(scene) + " --out " + q(only / "d") + " --passes depth", dir).code == 0);
    CHECK(file_count(only) == 1);
    CHECK(fs::exists(only / "d.depth.pfm"));

    const fs::path small = dir / "small";
    fs::create_directories(small);
    const Run r = run("render " + q(scene) + " --out " + q(small / "s") +
                          " --passes color --resolution 10x6 --samples 2 --seed 5 --stats-json",
                      dir);
    REQUIRE(r.code == 0);
    const auto stats = nlohmann::json::parse(r.out);
    CHECK(stats["width"] == 10);
    CHECK(stats["samples_per_pixel"] == 2);
    CHECK(stats["seed"] == 5);
    const Image8 img = read_png((small / "s.png").string());
    CHECK(img.width == 10);
    CHECK(img.height == 6);

    CHECK(run("render " + q(scene) + " --out " + q(dir / "x") + " --resolution 10by6", dir).code == 2);
    CHECK(run("render " + q(scene) + " --out " + q(dir / "x") + " --passes colour", dir).code == 2);
    CHECK(run("render " + q(scene) + " --out " + q(dir / "x") + " --samples 0", dir).code == 2);
}

TEST_CASE("render: deterministic for a seed and any thread count") {
    const auto dir = fixtures::temp_dir("cli_determinism");
    const fs::path scene = write_ball(dir);
    REQUIRE(run("render " + q(scene) + " --out " + q(dir / "a") + " --seed 3 --threads 1", dir).code == 0);
    REQUIRE(run("render " + q(scene) + " --out " + q(dir / "b") + " --seed 3 --threads 3", dir).code == 0);
    REQUIRE(run("render " + q(scene) + " --out " + q(dir / "c") + " --seed 3", dir, "SCIRENDER_THREADS=2").code == 0);
    for (const char* suffix : {".png", ".depth.pfm", ".albedo.png"}) {
        const std::string a = read_file((dir / (std::string("a") + suffix)).string());
        CHECK(a == read_file((dir / (std::string("b") + suffix)).string()));
        CHECK(a == read_file((dir / (std::string("c") + suffix)).string()));
    }
    REQUIRE(run("render " + q(scene) + " --out " + q(dir / "d") + " --seed 4", dir).code == 0);
    CHECK(read_file((dir / "a.png").string()) != read_file((dir / "d.png").string()));
}

TEST_CASE("render: error exit codes") {
    const auto dir = fixtures::temp_dir("cli_render_errors");
    const Run missing = run("render " + q(dir / "nope.scene.json") + " --out " + q(dir / "x"), dir);
    CHECK(missing.code == 3);
    CHECK(missing.err.find("error") != std::string::npos);
    write_file((dir / "bad.scene.json").string(), R"({"version": 1, "renderables": [{"kind": "cube", "sise": 1}]})");
    const Run bad = run("render " + q(dir / "bad.scene.json") + " --out " + q(dir / "x"), dir);
    CHECK(bad.code == 2);
    CHECK(bad.err.find("sise") != std::string::npos);
    write_file((dir / "nocam.scene.json").string(), R"({"version": 1})");
    CHECK(run("render " + q(dir / "nocam.scene.json") + " --out " + q(dir / "x"), dir).code == 2);
    const fs::path scene = write_furnace(dir);
    CHECK(run("render " + q(scene) + " --out " + q(dir / "no_such_dir" / "x"), dir).code == 3);
}

TEST_CASE("meshify") {
    const auto dir = fixtures::temp_dir("cli_meshify");
    const fs::path cloud = write_sphere_cloud(dir, true);
    const std::string base = "meshify " + q(cloud) + " --target-faces 200 --tex-res 256 --gap 2 --bake-k 4";
    const Run r = run(base + " --out-mesh " + q(dir / "m1.obj") + " --out-texture " + q(dir / "t1.png") + " --stats-json", dir);
    REQUIRE(r.code == 0);
    const auto stats = nlohmann::json::parse(r.out);
    CHECK(stats["faces_simplified"].get<int>() <= 200);
    CHECK(stats["faces_reconstructed"].get<int>() > 200);
    CHECK(stats["atlas_occupancy"].get<double>() > 0);
    CHECK(stats["normals_estimated"] == false);
    const ObjData obj = read_obj((dir / "m1.obj").string());
    CHECK(obj.mesh.faces.size() <= 200);
    REQUIRE(obj.uv.has_value());
    CHECK(obj.uv->uv.size() == obj.mesh.faces.size());
    CHECK(read_file((dir / "m1.mtl").string()).find("t1.png") != std::string::npos);
    const Image8 tex = read_png((dir / "t1.png").string());
    CHECK(tex.width == 256);

    const Run again = run(base + " --out-mesh " + q(dir / "m2.obj") + " --out-texture " + q(dir / "t1b.png"), dir);
    REQUIRE(again.code == 0);
    CHECK(again.out.find("faces simplified") != std::string::npos);
    CHECK(read_file((dir / "t1.png").string()) == read_file((dir / "t1b.png").string()));
    std::string o1 = read_file((dir / "m1.obj").string()), o2 = read_file((dir / "m2.obj").string());
    CHECK(o1.substr(o1.find('\n')) == o2.substr(o2.find('\n')));

    const Run radii = run("meshify " + q(cloud) + " --radii 0.1,0.15,0.2 --target-faces 100 --tex-res 128 --out-mesh " +
                              q(dir / "r.obj") + " --out-texture " + q(dir / "r.png") + " --stats-json",
                          dir);
    REQUIRE(radii.code == 0);
    CHECK(nlohmann::json::parse(radii.out)["radii"].size() == 3);
}

TEST_CASE("meshify errors") {
    const auto dir = fixtures::temp_dir("cli_meshify_errors");
    const fs::path plain = write_sphere_cloud(dir, false);
    const Run nocolor = run("meshify " + q(plain) + " --out-mesh " + q(dir / "m.obj") + " --out-texture " + q(dir / "t.png"), dir);
    CHECK(nocolor.code == 4);
    CHECK(nocolor.err.find("bake requires colors") != std::string::npos);
    const fs::path cloud = write_sphere_cloud(dir, true);
    const Run tiny = run("meshify " + q(cloud) + " --tex-res 4 --out-mesh " + q(dir / "m.obj") + " --out-texture " + q(dir / "t.png"), dir);
    CHECK(tiny.code == 4);
    CHECK(tiny.err.find("atlas:") != std::string::npos);
    CHECK(run("meshify " + q(cloud) + " --radii 0.2,0.1 --out-mesh " + q(dir / "m.obj") + " --out-texture " + q(dir / "t.png"), dir).code == 4);
    CHECK(run("meshify " + q(dir / "none.ply") + " --out-mesh " + q(dir / "m.obj") + " --out-texture " + q(dir / "t.png"), dir).code == 3);
    CHECK_FALSE(fs::exists(dir / "m.obj"));
}

TEST_CASE("trajectory") {
    const auto dir = fixtures::temp_dir("cli_trajectory");
    const fs::path keys = write_keypoints(dir);
    const Run r = run("trajectory " + q(keys) + " --fps 5", dir);
    REQUIRE(r.code == 0);
    const auto frames = frames_from_string(r.out);
    REQUIRE(frames.size() == 6);
    const Trajectory t = load_keypoints(keys.string());
    CHECK(frames[0].pose.position == t.keypoints()[0].position);
    CHECK(frames[0].pose.rotation == t.keypoints()[0].rotation);
    CHECK(frames[5].pose.position == t.keypoints()[1].position);
    CHECK(frames[5].time == 1.0);

    REQUIRE(run("trajectory " + q(keys) + " --fps 10 --out " + q(dir / "f.json"), dir).code == 0);
    const auto doubled = frames_from_string(read_file((dir / "f.json").string()));
    CHECK(doubled.size() - 1 == 2 * (frames.size() - 1));

    const Run stats = run("trajectory " + q(keys) + " --fps 5 --stats-json", dir);
    CHECK(nlohmann::json::parse(stats.out)["frames"] == 6);

    write_file((dir / "empty.json").string(), R"({"version": 1, "keypoints": []})");
    const Run empty = run("trajectory " + q(dir / "empty.json") + " --fps 5", dir);
    CHECK(empty.code == 2);
    CHECK(run("trajectory " + q(keys) + " --fps 0", dir).code == 2);
    CHECK(run("trajectory " + q(dir / "missing.json") + " --fps 5", dir).code == 3);
}

TEST_CASE("pc-color") {
    const auto dir = fixtures::temp_dir("cli_pc_color");
    const fs::path plane = write_plane_cloud(dir);
    const PlyData in = read_ply(plane.string());

    REQUIRE(run("pc-color " + q(plane) + " --camera 0,0,5 --out " + q(dir / "above.ply"), dir).code == 0);
    const PlyData above = read_ply((dir / "above.ply").string());
    REQUIRE(above.colors.size() == in.colors.size());
    CHECK(above.has_alpha);
    for (std::size_t i = 0; i < in.colors.size(); ++i) CHECK(above.colors[i] == in.colors[i]);

    const Run below = run("pc-color " + q(plane) + " --camera 0,0,-5 --back-color 0,0,1 --back-alpha 0.4 --k 6 --out " +
                              q(dir / "below.ply") + " --stats-json",
                          dir);
    REQUIRE(below.code == 0);
    CHECK(nlohmann::json::parse(below.out)["back_facing"] == 64);
    const PlyData b = read_ply((dir / "below.ply").string());
    for (const Vec4& c : b.colors) {
        CHECK(c.x == 0.0);
        CHECK(c.z == 1.0);
        CHECK(c.w == doctest::Approx(0.4).epsilon(0.01));
    }

    PlyData two;
    two.vertices = {{0, 0, 0}, {1, 0, 0}};
    write_ply(two, (dir / "two.ply").string());
    const Run few = run("pc-color " + q(dir / "two.ply") + " --camera 0,0,1 --k 3 --out " + q(dir / "o.ply"), dir);
    CHECK(few.code == 2);
    CHECK(few.err.find("error") != std::string::npos);
    CHECK(run("pc-color " + q(plane) + " --camera 0,0 --out " + q(dir / "o.ply"), dir).code == 2);
    CHECK(run("pc-color " + q(dir / "missing.ply") + " --camera 0,0,1 --out " + q(dir / "o.ply"), dir).code == 3);
}
