#pragma once

// File formats: scene documents, PLY, OBJ, PNG and PFM.
//
// Every loader throws scirender::Error (parse_error, schema_error, io_error,
// unsupported, ...) on bad input and never aborts.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scirender/appearance.hpp"
#include "scirender/image.hpp"
#include "scirender/renderables.hpp"
#include "scirender/scene.hpp"
#include "scirender/trajectory.hpp"

namespace scirender {

// ------------------------------------------------------------------- bytes

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

// --------------------------------------------------------------------- PNG

Image8 read_png(const std::string& path);
Image8 decode_png(std::string_view bytes);
void write_png(const Image8& img, const std::string& path);
std::string encode_png(const Image8& img);

/// PNG decoded to linear RGBA (inverse sRGB on color channels).
Image load_texture_png(const std::string& path);

// --------------------------------------------------------------------- PFM

struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // row-major, top row first
};

/// Grayscale "Pf", little-endian, rows stored bottom to top.
void write_pfm(const FloatImage& img, const std::string& path);
std::string encode_pfm(const FloatImage& img);
FloatImage read_pfm(const std::string& path);
FloatImage decode_pfm(std::string_view bytes);

// --------------------------------------------------------------------- PLY

struct PlyData {
    std::vector<Vec3> vertices;
    std::vector<Vec3> normals;  // empty or one per vertex
    std::vector<Vec4> colors;   // empty or one per vertex, in [0,1]
    bool has_alpha = false;
    std::vector<Face> faces;    // polygons fan-triangulated
    bool has_faces = false;     // a face element was declared
};

enum class PlyFormat { ascii, binary_little_endian };

PlyData parse_ply(std::string_view bytes);
PlyData read_ply(const std::string& path);
std::string encode_ply(const PlyData& ply, PlyFormat format);
void write_ply(const PlyData& ply, const std::string& path, PlyFormat format = PlyFormat::binary_little_endian);

/// A PLY with a face element becomes a Mesh (vertex colors bound when
/// present), otherwise a PointCloud.
std::variant<PointCloud, Mesh> load_ply(const std::string& path);

// --------------------------------------------------------------------- OBJ

struct ObjData {
    TriMesh mesh;
    std::optional<FacesUV> uv;  // set when every face carries texture indices
    std::string mtllib;
};

ObjData parse_obj(std::string_view text);
ObjData read_obj(const std::string& path);
std::string encode_obj(const TriMesh& mesh, const FacesUV* uv, const std::string& mtllib = {});

/// Writes the OBJ; when `texture_file` is given also writes a sibling .mtl
/// referencing it as the diffuse map.
void write_obj(const TriMesh& mesh, const FacesUV* uv, const std::string& path,
               const std::string& texture_file = {});

// ----------------------------------------------------------- scene documents

/// Canonical text: sorted keys, two-space indent, quaternions with w >= 0 and
/// floats written with 9 significant digits (17 when 9 do not reproduce the
/// value). Arrays larger than `inline_limit` scalars are written to sidecar
/// files "<stem>.<n>.bin" next to the document.
void save_scene(const Scene& scene, const std::string& path, std::size_t inline_limit = 4096);
Scene load_scene(const std::string& path);

/// Document text without sidecars (all arrays inline).
std::string scene_to_string(const Scene& scene);
/// Parses a document whose sidecar references resolve relative to `base_dir`.
Scene scene_from_string(std::string_view text, const std::string& base_dir = ".");

/// {"version": 1, "keypoints": [{"time", "position", "rotation": {"type", "value"}}]}
Trajectory load_keypoints(const std::string& path);
Trajectory keypoints_from_string(std::string_view text);
std::string keypoints_to_string(const Trajectory& traj);

struct Frame {
    double time = 0;
    Pose pose;
};

/// {"version": 1, "frames": [{"time", "position", "rotation": {"type": "quaternion", "value"}}]}
std::string frames_to_string(const std::vector<Frame>& frames);
std::vector<Frame> frames_from_string(std::string_view text);

}  // namespace scirender
