#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "scirender/error.hpp"
#include "scirender/io.hpp"
#include "scirender/meshify.hpp"
#include "scirender/pc_utils.hpp"
#include "scirender/renderer.hpp"
#include "scirender/trajectory.hpp"

namespace fs = std::filesystem;
using namespace scirender;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kSceneError = 2;
constexpr int kIoError = 3;
constexpr int kMeshifyError = 4;

int report(const Error& e, int fallback) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::io_error ? kIoError : fallback;
}

std::vector<double> parse_numbers(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size() || !std::isfinite(v)) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_argument, std::string("malformed ") + what + " '" + s + "'");
        }
    }
    return out;
}

Vec3 parse_vec3(const std::string& s, const char* what) {
    const auto v = parse_numbers(s, what);
    if (v.size() != 3) throw Error(ErrorCode::invalid_argument, std::string(what) + " needs 3 comma-separated values");
    return {v[0], v[1], v[2]};
}

int env_threads() {
    if (const char* s = std::getenv("SCIRENDER_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(s, &end, 10);
        if (end != s && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return 0;
}

void emit_stats(const json& j) { std::cout << j.dump() << "\n"; }

// Normals point away from the centroid; where that is undecided (planar
// clouds) the largest-magnitude component is made positive.
void orient_normals(const std::vector<Vec3>& points, std::vector<Vec3>& normals) {
    Vec3 c;
    for (const Vec3& p : points) c = c + p;
    c = c / static_cast<double>(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        Vec3& n = normals[i];
        const Vec3 d = points[i] - c;
        const double s = dot(n, d);
        if (std::abs(s) > 1e-12 * length(d)) {
            if (s < 0) n = -n;
            continue;
        }
        const double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
        const double lead = az >= ax && az >= ay ? n.z : (ay >= ax ? n.y : n.x);
        if (lead < 0) n = -n;
    }
}

// ------------------------------------------------------------------ render

struct RenderArgs {
    std::string scene;
    std::string out;
    std::string passes;
    std::optional<int> samples;
    std::string resolution;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool stats = false;
};

int cmd_render(const RenderArgs& a) {
    try {
        Scene scene = load_scene(a.scene);
        RenderSettings s = scene.settings;
        if (!a.passes.empty()) {
            s.passes = {false, false, false};
            std::stringstream ss(a.passes);
            std::string p;
            while (std::getline(ss, p, ',')) {
                if (p == "color") s.passes.color = true;
                else if (p == "depth") s.passes.depth = true;
                else if (p == "albedo") s.passes.albedo = true;
                else throw Error(ErrorCode::invalid_argument, "unknown pass '" + p + "'");
            }
        }
        if (a.samples) s.samples_per_pixel = *a.samples;
        if (!a.resolution.empty()) {
            const auto x = a.resolution.find('x');
            try {
                if (x == std::string::npos) throw std::invalid_argument("x");
                std::size_t u1 = 0, u2 = 0;
                const std::string ws = a.resolution.substr(0, x), hs = a.resolution.substr(x + 1);
                s.width = std::stoi(ws, &u1);
                s.height = std::stoi(hs, &u2);
                if (u1 != ws.size() || u2 != hs.size()) throw std::invalid_argument("x");
            } catch (const std::exception&) {
                throw Error(ErrorCode::invalid_argument, "resolution must look like WxH");
            }
        }
        if (a.seed) s.seed = *a.seed;
        validate_settings(s);
        const int threads = a.threads ? *a.threads : env_threads();

        const auto t0 = std::chrono::steady_clock::now();
        const RenderOutput out = render(scene, s, threads);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        std::vector<std::string> files;
        if (s.passes.color) {
            files.push_back(a.out + ".png");
            write_png(out.color, files.back());
        }
        if (s.passes.depth) {
            files.push_back(a.out + ".depth.pfm");
            write_pfm(FloatImage{out.width, out.height, out.depth}, files.back());
        }
        if (s.passes.albedo) {
            files.push_back(a.out + ".albedo.png");
            write_png(out.albedo, files.back());
        }
        if (a.stats) {
            emit_stats({{"command", "render"},
                        {"width", out.width},
                        {"height", out.height},
                        {"samples_per_pixel", s.samples_per_pixel},
                        {"seed", s.seed},
                        {"outputs", files},
                        {"seconds", secs}});
        } else {
            std::cout << "rendered " << out.width << "x" << out.height << " at " << s.samples_per_pixel
                      << " spp in " << secs << " s\n";
            for (const auto& f : files) std::cout << "  " << f << "\n";
        }
        return kOk;
    } catch (const Error& e) {
        return report(e, kSceneError);
    }
}

// ----------------------------------------------------------------- meshify

struct MeshifyArgs {
    std::string input;
    std::string out_mesh;
    std::string out_texture;
    std::string radii;
    std::optional<std::size_t> target_faces;
    std::optional<int> tex_res;
    std::optional<int> gap;
    std::optional<int> bake_k;
    bool stats = false;
};

int cmd_meshify(const MeshifyArgs& a) {
    PlyData ply;
    try {
        ply = read_ply(a.input);
    } catch (const Error& e) {
        return report(e, kMeshifyError);
    }
    try {
        MeshifyConfig cfg;
        if (!a.radii.empty()) cfg.bpa_radii = parse_numbers(a.radii, "radii");
        if (a.target_faces) cfg.target_faces = *a.target_faces;
        if (a.tex_res) cfg.texture_resolution = *a.tex_res;
        if (a.gap) cfg.gap_px = *a.gap;
        if (a.bake_k) cfg.bake_k = *a.bake_k;
        std::optional<std::vector<Vec3>> normals;
        if (!ply.normals.empty()) normals = ply.normals;
        const MeshifyResult res = meshify_pc(ply.vertices, ply.colors, normals, cfg);
        const auto& tm = res.textured;

        const fs::path mesh_path(a.out_mesh), tex_path(a.out_texture);
        fs::path rel = tex_path.lexically_relative(mesh_path.parent_path().empty() ? fs::path(".") : mesh_path.parent_path());
        if (rel.empty() || tex_path.is_absolute() != mesh_path.is_absolute()) rel = fs::absolute(tex_path);
        write_png(encode_srgb(tm.texture, 3), a.out_texture);
        write_obj(tm.mesh, &tm.uv, a.out_mesh, rel.generic_string());

        const auto& log = res.log;
        if (a.stats) {
            emit_stats({{"command", "meshify"},
                        {"points", ply.vertices.size()},
                        {"stages", log.stages},
                        {"normals_estimated", log.normals_estimated},
                        {"radii", log.radii},
                        {"faces_reconstructed", log.faces_reconstructed},
                        {"faces_simplified", log.faces_simplified},
                        {"simplify_reached_target", log.simplify_reached_target},
                        {"texture_resolution", tm.texture.width},
                        {"atlas_occupancy", log.atlas_occupancy}});
        } else {
            std::cout << "points:              " << ply.vertices.size() << "\n"
                      << "normals estimated:   " << (log.normals_estimated ? "yes" : "no") << "\n"
                      << "faces reconstructed: " << log.faces_reconstructed << "\n"
                      << "faces simplified:    " << log.faces_simplified
                      << (log.simplify_reached_target ? "" : " (target not reached)") << "\n"
                      << "atlas occupancy:     " << log.atlas_occupancy << "\n";
        }
        return kOk;
    } catch (const Error& e) {
        return report(e, kMeshifyError);
    }
}

// -------------------------------------------------------------- trajectory

struct TrajectoryArgs {
    std::string input;
    double fps = 0;
    std::string out;
    bool stats = false;
};

int cmd_trajectory(const TrajectoryArgs& a) {
    try {
        const Trajectory traj = load_keypoints(a.input);
        const auto times = frame_times_for_fps(traj, a.fps);
        const auto poses = refine_trajectory(traj, times);
        std::vector<Frame> frames;
        for (std::size_t i = 0; i < times.size(); ++i) frames.push_back({times[i], poses[i]});
        const std::string doc = frames_to_string(frames);
        if (a.out.empty()) {
            if (!a.stats) std::cout << doc;
        } else {
            write_file(a.out, doc);
        }
        if (a.stats)
            emit_stats({{"command", "trajectory"},
                        {"keypoints", traj.keypoints().size()},
                        {"frames", frames.size()},
                        {"fps", a.fps}});
        else if (!a.out.empty())
            std::cout << frames.size() << " frames written to " << a.out << "\n";
        return kOk;
    } catch (const Error& e) {
        return report(e, kSceneError);
    }
}

// ---------------------------------------------------------------- pc-color

struct PcColorArgs {
    std::string input;
    std::string camera;
    int k = 16;
    std::string back_color;
    double back_alpha = 0.2;
    std::string out;
    bool stats = false;
};

int cmd_pc_color(const PcColorArgs& a) {
    try {
        PlyData ply = read_ply(a.input);
        const Vec3 cam = parse_vec3(a.camera, "camera");
        const Vec3 back = a.back_color.empty() ? Vec3{0.8, 0.8, 0.8} : parse_vec3(a.back_color, "back color");
        bool estimated = false;
        if (ply.normals.empty()) {
            ply.normals = estimate_normals_from_pointcloud(ply.vertices, a.k).normals;
            orient_normals(ply.vertices, ply.normals);
            estimated = true;
        }
        std::vector<Vec3> front;
        if (ply.colors.empty()) {
            front.push_back({0.8, 0.8, 0.8});
        } else {
            for (const Vec4& c : ply.colors) front.push_back(c.rgb());
        }
        ply.colors = approximate_colors_from_camera(ply.vertices, ply.normals, cam, front, back, a.back_alpha);
        ply.has_alpha = true;
        write_ply(ply, a.out);
        std::size_t back_facing = 0;
        for (std::size_t i = 0; i < ply.vertices.size(); ++i)
            if (dot(ply.normals[i], cam - ply.vertices[i]) < 0) ++back_facing;
        if (a.stats)
            emit_stats({{"command", "pc-color"},
                        {"points", ply.vertices.size()},
                        {"normals_estimated", estimated},
                        {"back_facing", back_facing}});
        else
            std::cout << ply.vertices.size() << " points, " << back_facing << " back-facing\n";
        return kOk;
    } catch (const Error& e) {
        return report(e, kSceneError);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scirender: scientific scene rendering and point-cloud meshing"};
    app.require_subcommand(1);

    RenderArgs ra;
    auto* render_cmd = app.add_subcommand("render", "Render a scene document to PNG/PFM passes");
    render_cmd->add_option("scene", ra.scene, "Scene document (.scene.json)")->required();
    render_cmd->add_option("--out", ra.out, "Output prefix: PREFIX.png, PREFIX.depth.pfm, PREFIX.albedo.png")->required();
    render_cmd->add_option("--passes", ra.passes, "Comma-separated passes: color,depth,albedo");
    render_cmd->add_option("--samples", ra.samples, "Samples per pixel");
    render_cmd->add_option("--resolution", ra.resolution, "Image size as WxH");
    render_cmd->add_option("--seed", ra.seed, "Random seed");
    render_cmd->add_option("--threads", ra.threads, "Worker threads (default: SCIRENDER_THREADS or hardware)");
    render_cmd->add_flag("--stats-json", ra.stats, "Print statistics as one JSON object");

    MeshifyArgs ma;
    auto* meshify_cmd = app.add_subcommand("meshify", "Reconstruct a textured mesh from a colored PLY point cloud");
    meshify_cmd->add_option("input", ma.input, "Input point cloud (.ply with colors)")->required();
    meshify_cmd->add_option("--out-mesh", ma.out_mesh, "Output OBJ with vt records")->required();
    meshify_cmd->add_option("--out-texture", ma.out_texture, "Output PNG texture")->required();
    meshify_cmd->add_option("--radii", ma.radii, "Comma-separated ascending ball radii r1,r2,...");
    meshify_cmd->add_option("--target-faces", ma.target_faces, "Face budget after simplification");
    meshify_cmd->add_option("--tex-res", ma.tex_res, "Texture resolution R (R x R pixels)");
    meshify_cmd->add_option("--gap", ma.gap, "Gap between atlas triangles in pixels");
    meshify_cmd->add_option("--bake-k", ma.bake_k, "Neighbors averaged per texel");
    meshify_cmd->add_flag("--stats-json", ma.stats, "Print statistics as one JSON object");

    TrajectoryArgs ta;
    auto* traj_cmd = app.add_subcommand("trajectory", "Refine camera keypoints into per-frame poses");
    traj_cmd->add_option("keypoints", ta.input, "Keypoint document")->required();
    traj_cmd->add_option("--fps", ta.fps, "Frames per second")->required();
    traj_cmd->add_option("--out", ta.out, "Output frame document (default: standard output)");
    traj_cmd->add_flag("--stats-json", ta.stats, "Print statistics as one JSON object");

    PcColorArgs pa;
    auto* pc_cmd = app.add_subcommand("pc-color", "Color a point cloud by its visibility from a camera position");
    pc_cmd->add_option("input", pa.input, "Input point cloud (.ply)")->required();
    pc_cmd->add_option("--camera", pa.camera, "Camera position X,Y,Z")->required();
    pc_cmd->add_option("--k", pa.k, "Neighbors for normal estimation");
    pc_cmd->add_option("--back-color", pa.back_color, "Color of back-facing points r,g,b");
    pc_cmd->add_option("--back-alpha", pa.back_alpha, "Alpha of back-facing points");
    pc_cmd->add_option("--out", pa.out, "Output PLY")->required();
    pc_cmd->add_flag("--stats-json", pa.stats, "Print statistics as one JSON object");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        if (app.get_subcommands().empty()) {
            std::cout << app.help("", CLI::AppFormatMode::All);
            return kOk;
        }
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kSceneError;
    }

    try {
        if (*render_cmd) return cmd_render(ra);
        if (*meshify_cmd) return cmd_meshify(ma);
        if (*traj_cmd) return cmd_trajectory(ta);
        if (*pc_cmd) return cmd_pc_color(pa);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kSceneError;
    }
    return kSceneError;
}
