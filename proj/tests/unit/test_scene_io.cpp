#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "scirender/error.hpp"
#include "scirender/io.hpp"
#include "scirender/rotation.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

using namespace scirender;
namespace fs = std::filesystem;

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

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

Scene small_scene() {
    Scene s;
    Mesh m;
    m.geometry = tessellate(primitive::Cube{1});
    m.appearance.colors = UniformColor{{0.1, 0.2, 0.3, 1}};
    m.appearance.material = plastic_material();
    m.pose = {{1.0 / 3.0, 0.1, -2}, to_quaternion(EulerXYZ{0.1, 0.2, 0.3})};
    s.add_renderable(m, "cube_mesh");
    PointLight p;
    p.pose.position = {0, 0, 3};
    s.add_light(p);
    SpotLight sp;
    sp.pose = {{1, 1, 3}, look_at_rotation({1, 1, 3}, {0, 0, 0})};
    s.add_light(sp);
    const Vec3 eye{0, -5, 1};
    s.set_camera(PerspectiveCamera{400, 64, 48, {eye, look_at_rotation(eye, {0, 0, 0})}});
    return s;
}

std::string corpus(const std::string& name) { return std::string(SCIRENDER_TEST_CORPUS) + "/" + name; }

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void parse_by_name(const std::string& name, const std::string& bytes) {
    if (ends_with(name, ".keypoints.json")) keypoints_from_string(bytes);
    else if (ends_with(name, ".json")) scene_from_string(bytes, SCIRENDER_TEST_CORPUS);
    else if (ends_with(name, ".ply")) parse_ply(bytes);
    else if (ends_with(name, ".obj")) parse_obj(bytes);
    else if (ends_with(name, ".png")) decode_png(bytes);
    else if (ends_with(name, ".pfm")) decode_pfm(bytes);
    else FAIL("unknown corpus file " << name);
}

}  // namespace

TEST_CASE("minimal document is an empty scene") {
    const Scene s = load_scene(corpus("minimal.scene.json"));
    CHECK(s.renderables().empty());
    CHECK(s.lights().empty());
    CHECK_FALSE(s.camera().has_value());
    CHECK(s.settings == RenderSettings{});
}

TEST_CASE("scene round trip is byte-identical") {
    const Scene s = small_scene();
    const std::string t1 = scene_to_string(s);
    const Scene back = scene_from_string(t1);
    CHECK(scene_to_string(back) == t1);
    CHECK(back.renderables().size() == 1);
    CHECK(back.lights().size() == 2);
    CHECK(pose_of(back.renderable("cube_mesh")) == pose_of(s.renderable("cube_mesh")));
    const auto& m = std::get<Mesh>(back.renderable("cube_mesh"));
    CHECK(m.geometry == std::get<Mesh>(s.renderable("cube_mesh")).geometry);

    const Scene full = load_scene(corpus("full.scene.json"));
    CHECK(scene_to_string(full) == read_file(corpus("full.scene.json")));
}

TEST_CASE("canonical formatting") {
    Scene s;
    Primitive p;
    p.pose = {{0.1, 1.0 / 3.0, 0}, Quat{-0.5, 0.5, 0.5, 0.5}};
    s.add_renderable(p, "c");
    const std::string t = scene_to_string(s);
    const auto doc = nlohmann::json::parse(t);
    const auto& q = doc["renderables"][0]["pose"]["rotation"]["value"];
    CHECK(q[0].get<double>() == 0.5);
    CHECK(q[1].get<double>() == -0.5);
    CHECK(t.find("0.1,") != std::string::npos);
    CHECK(t.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("unknown keys are rejected with their path") {
    const std::string msg = message_of([] { load_scene(corpus("bad_unknown_key.scene.json")); });
    CHECK(msg.find("/renderables/0/appearance") != std::string::npos);
    CHECK(msg.find("materail") != std::string::npos);
    CHECK(code_of([] { load_scene(corpus("bad_unknown_key.scene.json")); }) == ErrorCode::schema_error);
    CHECK(code_of([] { scene_from_string(R"({"version": 1, "extra": 0})"); }) == ErrorCode::schema_error);
    CHECK(code_of([] { scene_from_string(R"({"version": 2})"); }) == ErrorCode::unsupported);
    CHECK(code_of([] { scene_from_string(R"({"renderables": []})"); }) == ErrorCode::schema_error);
}

TEST_CASE("parse errors report line and column") {
    const std::string msg = message_of([] { scene_from_string("{\n  \"version\": 1,\n  oops\n}"); });
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(code_of([] { scene_from_string("[1e400]"); }) == ErrorCode::parse_error);
}

TEST_CASE("semantic errors inside documents carry their path") {
    const std::string doc = R"({"version": 1, "lights": [{"kind": "point", "tag": "a"}, {"kind": "point", "tag": "a"}]})";
    CHECK(code_of([&] { scene_from_string(doc); }) == ErrorCode::tag_collision);
    CHECK(message_of([&] { scene_from_string(doc); }).find("/lights/1") != std::string::npos);
}

TEST_CASE("sidecar files and digests") {
    const auto dir = fixtures::temp_dir("sidecar");
    const std::string path = (dir / "s.scene.json").string();
    const Scene s = small_scene();
    save_scene(s, path, 8);
    std::vector<fs::path> bins;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".bin") bins.push_back(e.path());
    REQUIRE_FALSE(bins.empty());
    const std::string text = read_file(path);
    CHECK(text.find("\"digest\"") != std::string::npos);
    CHECK(scene_to_string(load_scene(path)) == scene_to_string(s));

    std::string bytes = read_file(bins[0].string());
    bytes[0] = static_cast<char>(bytes[0] ^ 1);
    write_file(bins[0].string(), bytes);
    CHECK(code_of([&] { load_scene(path); }) == ErrorCode::parse_error);
    fs::remove(bins[0]);
    CHECK(code_of([&] { load_scene(path); }) == ErrorCode::io_error);
    CHECK(code_of([&] { load_scene((dir / "missing.scene.json").string()); }) == ErrorCode::io_error);
}

TEST_CASE("keypoints and frames documents") {
    const Trajectory t = load_keypoints(corpus("path.keypoints.json"));
    REQUIRE(t.keypoints().size() == 2);
    CHECK(t.keypoints()[1].position == Vec3{1, 0, 0});
    CHECK(keypoints_to_string(t) == read_file(corpus("path.keypoints.json")));
    std::vector<Frame> frames = {{0, {{1, 2, 3}, {}}}, {0.5, {{0, 0, 1.0 / 7}, to_quaternion(AxisAngle{{1, 0, 0}, 2})}}};
    const auto back = frames_from_string(frames_to_string(frames));
    REQUIRE(back.size() == 2);
    CHECK(back[1].pose == frames[1].pose);
    CHECK(back[1].time == 0.5);
}

TEST_CASE("PLY ascii point cloud with colors") {
    const PlyData d = read_ply(corpus("cloud.ascii.ply"));
    CHECK(d.vertices.size() == 12);
    CHECK(d.normals.size() == 12);
    CHECK(d.has_alpha);
    CHECK_FALSE(d.has_faces);
    CHECK(d.colors[1].x == doctest::Approx(20.0 / 255));
    const std::string three = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\n"
                              "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
                              "end_header\n0 0 0 255 0 0\n1 0 0 0 255 0\n0 1 0 0 0 51\n";
    const PlyData t = parse_ply(three);
    REQUIRE(t.colors.size() == 3);
    CHECK(t.colors[0] == Vec4{1, 0, 0, 1});
    CHECK(t.colors[2].z == doctest::Approx(0.2));
    const auto dir = fixtures::temp_dir("ply");
    write_file((dir / "t.ply").string(), three);
    const auto loaded = load_ply((dir / "t.ply").string());
    REQUIRE(std::holds_alternative<PointCloud>(loaded));
    CHECK(std::get<PointCloud>(loaded).points.size() == 3);
    const auto mesh = load_ply(corpus("mesh.binary.ply"));
    REQUIRE(std::holds_alternative<Mesh>(mesh));
    CHECK(std::get<Mesh>(mesh).geometry.faces.size() == 20);
}

TEST_CASE("PLY binary round trip is bit-exact") {
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<float> u(-1e6f, 1e6f);
    PlyData d;
    for (int i = 0; i < 300; ++i) {
        d.vertices.push_back({u(rng), u(rng), u(rng)});
        d.normals.push_back(normalize(Vec3{static_cast<float>(u(rng)), 1.0f, 2.0f}));
        d.colors.push_back({(i % 256) / 255.0, ((i * 7) % 256) / 255.0, 0, ((i * 3) % 256) / 255.0});
    }
    for (auto& n : d.normals) n = {static_cast<float>(n.x), static_cast<float>(n.y), static_cast<float>(n.z)};
    d.has_alpha = true;
    const PlyData b = parse_ply(encode_ply(d, PlyFormat::binary_little_endian));
    CHECK(b.vertices == d.vertices);
    CHECK(b.normals == d.normals);
    CHECK(b.colors == d.colors);
    CHECK(read_file(corpus("cloud.binary.ply")) == encode_ply(read_ply(corpus("cloud.binary.ply")), PlyFormat::binary_little_endian));
}

TEST_CASE("PLY errors") {
    CHECK(code_of([] { read_ply(corpus("bad_truncated.ply")); }) == ErrorCode::parse_error);
    CHECK(message_of([] { read_ply(corpus("bad_truncated.ply")); }).find("10") != std::string::npos);
    CHECK(code_of([] { read_ply(corpus("bad_bigendian.ply")); }) == ErrorCode::unsupported);
    CHECK(code_of([] { parse_ply("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n0\n"); }) ==
          ErrorCode::parse_error);
    CHECK(code_of([] { parse_ply("plx\n"); }) == ErrorCode::parse_error);
}

TEST_CASE("OBJ parsing") {
    const ObjData q = read_obj(corpus("quad_relative.obj"));
    REQUIRE(q.mesh.faces.size() == 2);
    CHECK(q.mesh.faces[0] == Face{0, 1, 2});
    CHECK(q.mesh.faces[1] == Face{0, 2, 3});
    for (std::size_t f = 0; f < 2; ++f) CHECK(face_normal(q.mesh, f).z == doctest::Approx(1));
    CHECK_FALSE(q.uv.has_value());

    const ObjData m = read_obj(corpus("mesh.obj"));
    CHECK(m.mesh.faces.size() == 20);
    REQUIRE(m.uv.has_value());
    CHECK(m.uv->uv.size() == 20);
    CHECK(m.mtllib == "mesh.mtl");

    const ObjData rel = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf -3/-3 -2/-2 -1/-1\nv 5 5 5\nf 1 2 -1\n");
    REQUIRE(rel.mesh.faces.size() == 2);
    CHECK(rel.mesh.faces[0] == Face{0, 1, 2});
    CHECK(rel.mesh.faces[1] == Face{0, 1, 3});
    CHECK_FALSE(rel.uv.has_value());

    CHECK(code_of([] { parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2 3\n"); }) == ErrorCode::parse_error);
}

TEST_CASE("OBJ write with material library") {
    const auto dir = fixtures::temp_dir("obj");
    const TriMesh m = tessellate(primitive::Cube{1});
    FacesUV uv;
    for (std::size_t f = 0; f < m.faces.size(); ++f) uv.uv.push_back({Vec2{0, 0}, Vec2{0.5, 0}, Vec2{0, 0.25}});
    write_obj(m, &uv, (dir / "box.obj").string(), "box.png");
    CHECK(fs::exists(dir / "box.mtl"));
    CHECK(read_file((dir / "box.mtl").string()).find("map_Kd box.png") != std::string::npos);
    const ObjData back = read_obj((dir / "box.obj").string());
    CHECK(back.mesh.vertices == m.vertices);
    CHECK(back.mesh.faces == m.faces);
    REQUIRE(back.uv.has_value());
    CHECK(back.uv->uv == uv.uv);
}

TEST_CASE("PNG") {
    const auto dir = fixtures::temp_dir("png");
    const std::string path = (dir / "white.png").string();
    write_png(Image8{1, 1, 3, {255, 255, 255}}, path);
    const Image8 w = read_png(path);
    CHECK(w.width == 1);
    CHECK(w.height == 1);
    CHECK(w.channels == 3);
    CHECK(w.data == std::vector<std::uint8_t>{255, 255, 255});
    const Image8 rgba = read_png(corpus("image.png"));
    CHECK(rgba.channels == 4);
    CHECK(rgba.data == std::vector<std::uint8_t>(24, 200));
    CHECK(code_of([] { decode_png("not a png"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { read_png("/nonexistent/x.png"); }) == ErrorCode::io_error);
}

TEST_CASE("PFM") {
    const auto dir = fixtures::temp_dir("pfm");
    const std::string path = (dir / "d.pfm").string();
    write_pfm({4, 3, std::vector<float>(12, 4.0f)}, path);
    const FloatImage d = read_pfm(path);
    CHECK(d.width == 4);
    CHECK(d.height == 3);
    for (float v : d.data) CHECK(v == 4.0f);

    const std::string bytes = encode_pfm({3, 2, {1, 2, 3, 4, 5, 6}});
    CHECK(bytes.rfind("Pf\n3 2\n-1.0\n", 0) == 0);
    REQUIRE(bytes.size() >= 24);
    float payload[6];
    std::memcpy(payload, bytes.data() + bytes.size() - 24, 24);
    // Bottom row first; the top row, starting with the top-left value, comes last.
    CHECK(payload[0] == 4.0f);
    CHECK(payload[3] == 1.0f);
    CHECK(payload[5] == 3.0f);
    CHECK(bytes == read_file(corpus("depth.pfm")));
    CHECK(decode_pfm(bytes).data == std::vector<float>{1, 2, 3, 4, 5, 6});
    CHECK(code_of([] { decode_pfm("PF\n1 1\n-1.0\n"); }) != ErrorCode::io_error);
}

TEST_CASE("corpus: seeds parse and mutations never escape") {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(SCIRENDER_TEST_CORPUS)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    REQUIRE(files.size() >= 10);
    std::mt19937_64 rng(91);
    for (const fs::path& f : files) {
        const std::string name = f.filename().string();
        const std::string bytes = read_file(f.string());
        CAPTURE(name);
        if (name.rfind("bad_", 0) == 0)
            CHECK_THROWS_AS(parse_by_name(name, bytes), Error);
        else
            CHECK_NOTHROW(parse_by_name(name, bytes));
        int escapes = 0;
        for (int r = 0; r < 400; ++r) {
            const std::string m = oracles::mutate(bytes, rng);
            try {
                parse_by_name(name, m);
            } catch (const Error&) {
            } catch (...) {
                ++escapes;
            }
        }
        CHECK(escapes == 0);
    }
}
