#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <set>

#include "json.hpp"

#include "scirender/error.hpp"
#include "scirender/io.hpp"
#include "scirender/rotation.hpp"

namespace scirender {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "sidecar files assume a little-endian host");

constexpr int kVersion = 1;

// ------------------------------------------------------------------ printer

std::string format_double(double v) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "non-finite values cannot be serialized");
    if (v == 0) v = 0.0;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool is_scalar(const json& j) { return !j.is_array() && !j.is_object(); }

void print(const json& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += inner + json(it.key()).dump() + ": ";
                print(it.value(), out, indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            bool flat = true;
            for (const auto& e : j) flat = flat && is_scalar(e);
            if (flat) {
                out += "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out += ", ";
                    print(j[i], out, indent + 1);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                out += inner;
                print(j[i], out, indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

std::string to_text(const json& j) {
    std::string out;
    print(j, out, 0);
    out += "\n";
    return out;
}

json parse_text(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        if (const auto p = what.find("parse error"); p != std::string::npos) what = what.substr(p);
        throw Error(ErrorCode::parse_error,
                    "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, e.what());
    }
}

// ------------------------------------------------------------ strict reader

std::string escape_pointer(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

[[noreturn]] void schema(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::schema_error, (path.empty() ? std::string("/") : path) + ": " + what);
}

// Rethrows library errors raised while building objects with the path prefixed.
template <class F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.code(), (path.empty() ? std::string("/") : path) + ": " + e.what());
    }
}

double as_num(const json& j, const std::string& path) {
    if (!j.is_number()) schema(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) schema(path, "number must be finite");
    return v;
}

long long as_int(const json& j, const std::string& path, long long lo, long long hi) {
    if (!j.is_number_integer()) schema(path, "expected an integer");
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(hi))
        schema(path, "integer out of range");
    const long long v = j.get<long long>();
    if (v < lo || v > hi) schema(path, "integer out of range");
    return v;
}

std::uint64_t as_u64(const json& j, const std::string& path) {
    if (!j.is_number_integer()) schema(path, "expected an integer");
    if (!j.is_number_unsigned() && j.get<long long>() < 0) schema(path, "expected a non-negative integer");
    return j.get<std::uint64_t>();
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) schema(path, "expected a boolean");
    return j.get<bool>();
}

std::string as_str(const json& j, const std::string& path) {
    if (!j.is_string()) schema(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> as_nums(const json& j, const std::string& path, std::size_t n) {
    if (!j.is_array() || j.size() != n) schema(path, "expected an array of " + std::to_string(n) + " numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(as_num(j[i], path + "/" + std::to_string(i)));
    return v;
}

Vec3 as_vec3(const json& j, const std::string& path) {
    const auto v = as_nums(j, path, 3);
    return {v[0], v[1], v[2]};
}

Vec4 as_rgba(const json& j, const std::string& path) {
    if (j.is_array() && j.size() == 3) return {as_vec3(j, path), 1.0};
    const auto v = as_nums(j, path, 4);
    return {v[0], v[1], v[2], v[3]};
}

class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) schema(path_, "expected an object");
    }

    const std::string& path() const { return path_; }
    std::string at(const std::string& key) const { return path_ + "/" + escape_pointer(key); }

    const json* find(const std::string& key) {
        const auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        used_.insert(key);
        return &*it;
    }
    const json& need(const std::string& key) {
        const json* p = find(key);
        if (!p) schema(path_, "missing key '" + key + "'");
        return *p;
    }

    double num(const std::string& k) { return as_num(need(k), at(k)); }
    double num(const std::string& k, double def) {
        const json* p = find(k);
        return p ? as_num(*p, at(k)) : def;
    }
    int integer(const std::string& k, int def, int lo, int hi) {
        const json* p = find(k);
        return p ? static_cast<int>(as_int(*p, at(k), lo, hi)) : def;
    }
    bool boolean(const std::string& k, bool def) {
        const json* p = find(k);
        return p ? as_bool(*p, at(k)) : def;
    }
    std::string str(const std::string& k) { return as_str(need(k), at(k)); }
    Vec3 vec3(const std::string& k, const Vec3& def) {
        const json* p = find(k);
        return p ? as_vec3(*p, at(k)) : def;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) schema(at(it.key()), "unknown key '" + it.key() + "'");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

// ------------------------------------------------------------------ arrays

enum class DType { float64, uint32 };

const char* dtype_name(DType d) { return d == DType::float64 ? "float64" : "uint32"; }

std::string fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct WriteCtx {
    bool sidecars = false;
    std::size_t inline_limit = 0;
    fs::path dir;
    std::string stem;
    std::vector<std::pair<fs::path, std::string>> files;
};

struct ReadCtx {
    fs::path base_dir;
};

json nested(const std::vector<double>& flat, const std::vector<std::size_t>& shape, std::size_t dim,
            std::size_t& pos, DType dtype) {
    json arr = json::array();
    for (std::size_t i = 0; i < shape[dim]; ++i) {
        if (dim + 1 == shape.size()) {
            if (dtype == DType::uint32)
                arr.push_back(static_cast<std::uint64_t>(flat[pos++]));
            else
                arr.push_back(flat[pos++]);
        } else {
            arr.push_back(nested(flat, shape, dim + 1, pos, dtype));
        }
    }
    return arr;
}

json write_array(WriteCtx& ctx, const std::vector<double>& flat, const std::vector<std::size_t>& shape,
                 DType dtype) {
    if (ctx.sidecars && flat.size() > ctx.inline_limit) {
        std::string bytes;
        bytes.resize(flat.size() * (dtype == DType::float64 ? 8 : 4));
        for (std::size_t i = 0; i < flat.size(); ++i) {
            if (dtype == DType::float64) {
                std::memcpy(&bytes[i * 8], &flat[i], 8);
            } else {
                const auto u = static_cast<std::uint32_t>(flat[i]);
                std::memcpy(&bytes[i * 4], &u, 4);
            }
        }
        const std::string name = ctx.stem + "." + std::to_string(ctx.files.size()) + ".bin";
        json ref = {{"file", name},
                    {"dtype", dtype_name(dtype)},
                    {"shape", shape},
                    {"digest", fnv1a64(bytes)}};
        ctx.files.emplace_back(ctx.dir / name, std::move(bytes));
        return ref;
    }
    std::size_t pos = 0;
    return nested(flat, shape, 0, pos, dtype);
}

struct ArrayData {
    std::vector<double> flat;
    std::vector<std::size_t> shape;
};

void flatten(const json& j, const std::string& path, std::size_t dim, std::vector<std::size_t>& shape,
             const std::vector<long>& expect, ArrayData& out, DType dtype) {
    if (!j.is_array()) schema(path, "expected an array");
    if (dim >= shape.size()) {
        shape.push_back(j.size());
        if (expect[dim] >= 0 && static_cast<long>(j.size()) != expect[dim])
            schema(path, "expected length " + std::to_string(expect[dim]));
    } else if (shape[dim] != j.size()) {
        schema(path, "ragged array");
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        if (dim + 1 == expect.size()) {
            if (dtype == DType::uint32)
                out.flat.push_back(static_cast<double>(as_int(j[i], p, 0, 0xFFFFFFFFll)));
            else
                out.flat.push_back(as_num(j[i], p));
        } else {
            flatten(j[i], p, dim + 1, shape, expect, out, dtype);
        }
    }
}

// `expect` gives the required length of each dimension, -1 for any.
ArrayData read_array(const ReadCtx& ctx, const json& j, const std::string& path, const std::vector<long>& expect,
                     DType dtype) {
    ArrayData out;
    if (j.is_object()) {
        Obj o(j, path);
        const std::string file = o.str("file");
        const std::string dt = o.str("dtype");
        const std::string digest = o.str("digest");
        const json& shape_j = o.need("shape");
        o.finish();
        if (dt != dtype_name(dtype)) schema(o.at("dtype"), std::string("expected dtype ") + dtype_name(dtype));
        if (!shape_j.is_array() || shape_j.size() != expect.size())
            schema(o.at("shape"), "expected rank " + std::to_string(expect.size()));
        std::size_t count = 1;
        for (std::size_t d = 0; d < expect.size(); ++d) {
            const auto n = static_cast<std::size_t>(as_int(shape_j[d], o.at("shape") + "/" + std::to_string(d), 0,
                                                           std::numeric_limits<std::int32_t>::max()));
            if (expect[d] >= 0 && static_cast<long>(n) != expect[d])
                schema(o.at("shape"), "expected length " + std::to_string(expect[d]) + " in dimension " +
                                          std::to_string(d));
            out.shape.push_back(n);
            if (n != 0 && count > (std::size_t{1} << 40) / n) schema(o.at("shape"), "array too large");
            count *= n;
        }
        const fs::path fp = ctx.base_dir / file;
        std::string bytes;
        try {
            bytes = read_file(fp.string());
        } catch (const Error&) {
            throw Error(ErrorCode::io_error, o.at("file") + ": dangling sidecar reference '" + file + "'");
        }
        const std::size_t width = dtype == DType::float64 ? 8 : 4;
        if (bytes.size() != count * width)
            throw Error(ErrorCode::parse_error, o.at("file") + ": sidecar size does not match shape");
        if (fnv1a64(bytes) != digest)
            throw Error(ErrorCode::parse_error, o.at("digest") + ": sidecar digest mismatch");
        out.flat.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            if (dtype == DType::float64) {
                std::memcpy(&out.flat[i], &bytes[i * 8], 8);
                if (!std::isfinite(out.flat[i])) throw Error(ErrorCode::parse_error, o.at("file") + ": non-finite value");
            } else {
                std::uint32_t u;
                std::memcpy(&u, &bytes[i * 4], 4);
                out.flat[i] = u;
            }
        }
        return out;
    }
    flatten(j, path, 0, out.shape, expect, out, dtype);
    // Empty outer dimension leaves inner shape unknown.
    while (out.shape.size() < expect.size()) out.shape.push_back(expect[out.shape.size()] < 0 ? 0 : expect[out.shape.size()]);
    return out;
}

std::vector<Vec3> to_vec3s(const ArrayData& a) {
    std::vector<Vec3> v(a.flat.size() / 3);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = {a.flat[3 * i], a.flat[3 * i + 1], a.flat[3 * i + 2]};
    return v;
}

std::vector<double> flat3(const std::vector<Vec3>& v) {
    std::vector<double> f;
    f.reserve(v.size() * 3);
    for (const Vec3& p : v) f.insert(f.end(), {p.x, p.y, p.z});
    return f;
}

std::vector<double> flat4(const std::vector<Vec4>& v, int channels) {
    std::vector<double> f;
    f.reserve(v.size() * channels);
    for (const Vec4& c : v) {
        f.insert(f.end(), {c.x, c.y, c.z});
        if (channels == 4) f.push_back(c.w);
    }
    return f;
}

// ------------------------------------------------------------ pose/rotation

// Already canonical quaternions keep their exact bits so repeated saves agree.
Quat stable_canonical(const Quat& q) {
    const double n2 = q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
    if (std::abs(n2 - 1.0) <= 1e-14) return dot(canonicalize(q), q) < 0 ? -q : q;
    return canonicalize(q);
}

json quat_json(const Quat& q0) {
    const Quat q = stable_canonical(q0);
    return {{"type", "quaternion"}, {"value", {q.w, q.x, q.y, q.z}}};
}

json vec_json(const Vec3& v) { return {v.x, v.y, v.z}; }

json pose_json(const Pose& p) { return {{"position", vec_json(p.position)}, {"rotation", quat_json(p.rotation)}}; }

Quat read_rotation(const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string type = o.str("type");
    const json& v = o.need("value");
    const std::string vp = o.at("value");
    o.finish();
    if (type == "quaternion") {
        const auto a = as_nums(v, vp, 4);
        const Quat q{a[0], a[1], a[2], a[3]};
        at_path(vp, [&] { return to_quaternion(q); });
        return stable_canonical(q);
    }
    RotationSpec spec;
    if (type == "axis_angle") {
        const auto a = as_nums(v, vp, 4);
        spec = AxisAngle{{a[0], a[1], a[2]}, a[3]};
    } else if (type == "matrix") {
        if (!v.is_array() || v.size() != 3) schema(vp, "expected 3 rows");
        Mat3 m;
        for (int r = 0; r < 3; ++r) {
            const auto row = as_nums(v[r], vp + "/" + std::to_string(r), 3);
            for (int c = 0; c < 3; ++c) m(r, c) = row[c];
        }
        spec = m;
    } else if (type == "euler_xyz") {
        const auto a = as_nums(v, vp, 3);
        spec = EulerXYZ{a[0], a[1], a[2]};
    } else {
        schema(o.at("type"), "unknown rotation type '" + type + "'");
    }
    return at_path(vp, [&] { return to_quaternion(spec); });
}

Pose read_pose(Obj& parent) {
    Pose pose;
    const json* p = parent.find("pose");
    if (!p) return pose;
    Obj o(*p, parent.at("pose"));
    pose.position = o.vec3("position", {});
    if (const json* r = o.find("rotation")) pose.rotation = read_rotation(*r, o.at("rotation"));
    o.finish();
    return pose;
}

// ----------------------------------------------------------------- materials

json base_material_json(const BaseMaterial& m) {
    if (const auto* g = std::get_if<GlossyMaterial>(&m)) return {{"type", "glossy"}, {"roughness", g->roughness}};
    const auto& p = std::get<PrincipledMaterial>(m);
    return {{"type", "principled"},
            {"base_modulation", vec_json(p.base_modulation)},
            {"metallic", p.metallic},
            {"roughness", p.roughness},
            {"specular", p.specular},
            {"emission_color", vec_json(p.emission_color)},
            {"emission_strength", p.emission_strength},
            {"alpha", p.alpha}};
}

json material_json(const Material& m) {
    if (const auto* w = std::get_if<WireframeMaterial>(&m))
        return {{"type", "wireframe"},
                {"base", base_material_json(w->base)},
                {"thickness", w->thickness},
                {"wire_color", vec_json(w->wire_color)}};
    if (const auto* g = std::get_if<GlossyMaterial>(&m)) return base_material_json(*g);
    return base_material_json(std::get<PrincipledMaterial>(m));
}

PrincipledMaterial read_principled(Obj& o, const PrincipledMaterial& def) {
    PrincipledMaterial p = def;
    p.base_modulation = o.vec3("base_modulation", p.base_modulation);
    p.metallic = o.num("metallic", p.metallic);
    p.roughness = o.num("roughness", p.roughness);
    p.specular = o.num("specular", p.specular);
    p.emission_color = o.vec3("emission_color", p.emission_color);
    p.emission_strength = o.num("emission_strength", p.emission_strength);
    p.alpha = o.num("alpha", p.alpha);
    return p;
}

Material read_material(const json& j, const std::string& path, bool allow_wireframe = true) {
    Obj o(j, path);
    const std::string type = o.str("type");
    Material m;
    if (type == "principled") {
        m = read_principled(o, {});
    } else if (type == "metal") {
        m = read_principled(o, metal_material());
    } else if (type == "plastic") {
        m = read_principled(o, plastic_material());
    } else if (type == "glossy") {
        m = GlossyMaterial{o.num("roughness", GlossyMaterial{}.roughness)};
    } else if (allow_wireframe &&
               (type == "wireframe" || type == "metal_wireframe" || type == "plastic_wireframe")) {
        WireframeMaterial w = type == "metal_wireframe"     ? metal_wireframe_material()
                              : type == "plastic_wireframe" ? plastic_wireframe_material()
                                                            : WireframeMaterial{};
        if (type == "wireframe") {
            if (const json* b = o.find("base")) {
                const Material base = read_material(*b, o.at("base"), false);
                if (const auto* g = std::get_if<GlossyMaterial>(&base))
                    w.base = *g;
                else
                    w.base = std::get<PrincipledMaterial>(base);
            }
        }
        w.thickness = o.num("thickness", w.thickness);
        w.wire_color = o.vec3("wire_color", w.wire_color);
        m = w;
    } else {
        schema(o.at("type"), "unknown material type '" + type + "'");
    }
    o.finish();
    at_path(path, [&] { validate_material(m); });
    return m;
}

// -------------------------------------------------------------- color sources

json uv_json(WriteCtx& ctx, const UVMap& uv) {
    if (const auto* v = std::get_if<VertexUV>(&uv)) {
        std::vector<double> f;
        for (const Vec2& t : v->uv) f.insert(f.end(), {t.x, t.y});
        return {{"type", "vertex_uv"}, {"values", write_array(ctx, f, {v->uv.size(), 2}, DType::float64)}};
    }
    const auto& fu = std::get<FacesUV>(uv);
    std::vector<double> f;
    for (const auto& tri : fu.uv)
        for (const Vec2& t : tri) f.insert(f.end(), {t.x, t.y});
    return {{"type", "faces_uv"}, {"values", write_array(ctx, f, {fu.uv.size(), 3, 2}, DType::float64)}};
}

UVMap read_uv(const ReadCtx& ctx, const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string type = o.str("type");
    const json& v = o.need("values");
    UVMap out;
    if (type == "vertex_uv") {
        const auto a = read_array(ctx, v, o.at("values"), {-1, 2}, DType::float64);
        VertexUV m;
        for (std::size_t i = 0; i < a.shape[0]; ++i) m.uv.push_back({a.flat[2 * i], a.flat[2 * i + 1]});
        out = std::move(m);
    } else if (type == "faces_uv") {
        const auto a = read_array(ctx, v, o.at("values"), {-1, 3, 2}, DType::float64);
        FacesUV m;
        for (std::size_t i = 0; i < a.shape[0]; ++i) {
            std::array<Vec2, 3> tri;
            for (int k = 0; k < 3; ++k) tri[k] = {a.flat[6 * i + 2 * k], a.flat[6 * i + 2 * k + 1]};
            m.uv.push_back(tri);
        }
        out = std::move(m);
    } else {
        schema(o.at("type"), "unknown uv type '" + type + "'");
    }
    o.finish();
    return out;
}

std::string relative_to(const std::string& file, const fs::path& dir) {
    const fs::path p(file);
    const fs::path rel = p.lexically_relative(dir);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return p.generic_string();
}

json colors_json(WriteCtx& ctx, const ColorSource& c) {
    return std::visit(
        [&](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, UniformColor>) {
                return {{"type", "uniform"}, {"rgba", {s.rgba.x, s.rgba.y, s.rgba.z, s.rgba.w}}};
            } else if constexpr (std::is_same_v<T, VertexColors>) {
                const std::size_t ch = s.channels == 3 ? 3 : 4;
                return {{"type", "per_vertex"},
                        {"values", write_array(ctx, flat4(s.rgba, static_cast<int>(ch)), {s.rgba.size(), ch},
                                               DType::float64)}};
            } else if constexpr (std::is_same_v<T, TextureColors>) {
                const Image& img = *s.image;
                std::vector<double> px(img.pixels.begin(), img.pixels.end());
                json image = {{"width", img.width},
                              {"height", img.height},
                              {"pixels", write_array(ctx, px,
                                                     {static_cast<std::size_t>(img.height),
                                                      static_cast<std::size_t>(img.width), 4},
                                                     DType::float64)}};
                return {{"type", "texture"}, {"image", image}, {"uv", uv_json(ctx, s.uv)}};
            } else {
                return {{"type", "file_texture"},
                        {"path", relative_to(s.texture->path(), ctx.dir)},
                        {"uv", uv_json(ctx, s.uv)}};
            }
        },
        c);
}

ColorSource read_colors(const ReadCtx& ctx, const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string type = o.str("type");
    ColorSource out;
    if (type == "uniform") {
        out = UniformColor{as_rgba(o.need("rgba"), o.at("rgba"))};
    } else if (type == "per_vertex") {
        const json& v = o.need("values");
        long ch = 4;
        if (v.is_array() && !v.empty() && v[0].is_array()) ch = static_cast<long>(v[0].size());
        if (v.is_object() && v.contains("shape") && v["shape"].is_array() && v["shape"].size() == 2 &&
            v["shape"][1].is_number_integer())
            ch = v["shape"][1].get<long>();
        if (ch != 3 && ch != 4) schema(o.at("values"), "per-vertex colors need 3 or 4 channels");
        const auto a = read_array(ctx, v, o.at("values"), {-1, ch}, DType::float64);
        VertexColors vc;
        vc.channels = static_cast<int>(ch);
        for (std::size_t i = 0; i < a.shape[0]; ++i) {
            const double* p = &a.flat[i * ch];
            vc.rgba.push_back({p[0], p[1], p[2], ch == 4 ? p[3] : 1.0});
        }
        out = std::move(vc);
    } else if (type == "texture") {
        Obj im(o.need("image"), o.at("image"));
        const int w = static_cast<int>(as_int(im.need("width"), im.at("width"), 1, 1 << 16));
        const int h = static_cast<int>(as_int(im.need("height"), im.at("height"), 1, 1 << 16));
        const auto a = read_array(ctx, im.need("pixels"), im.at("pixels"), {h, w, 4}, DType::float64);
        im.finish();
        auto img = std::make_shared<Image>();
        img->width = w;
        img->height = h;
        img->pixels.assign(a.flat.begin(), a.flat.end());
        out = TextureColors{std::move(img), read_uv(ctx, o.need("uv"), o.at("uv"))};
    } else if (type == "file_texture") {
        const std::string p = o.str("path");
        const fs::path fp = fs::path(p).is_absolute() ? fs::path(p) : (ctx.base_dir / p).lexically_normal();
        out = FileTextureColors{std::make_shared<FileTexture>(fp.generic_string()),
                                read_uv(ctx, o.need("uv"), o.at("uv"))};
    } else {
        schema(o.at("type"), "unknown color type '" + type + "'");
    }
    o.finish();
    return out;
}

json appearance_json(WriteCtx& ctx, const Appearance& a) {
    return {{"colors", colors_json(ctx, a.colors)}, {"material", material_json(a.material)}};
}

Appearance read_appearance(const ReadCtx& ctx, Obj& parent) {
    Appearance a;
    const json* j = parent.find("appearance");
    if (!j) return a;
    Obj o(*j, parent.at("appearance"));
    if (const json* c = o.find("colors")) a.colors = read_colors(ctx, *c, o.at("colors"));
    if (const json* m = o.find("material")) a.material = read_material(*m, o.at("material"));
    o.finish();
    return a;
}

// ---------------------------------------------------------------- renderables

json primitive_fields(const PrimitiveSpec& spec) {
    using namespace primitive;
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Cube>) return {{"size", s.size}};
            else if constexpr (std::is_same_v<T, Circle>) return {{"radius", s.radius}, {"segments", s.segments}};
            else if constexpr (std::is_same_v<T, Cylinder>)
                return {{"radius", s.radius}, {"height", s.height}, {"segments", s.segments}};
            else if constexpr (std::is_same_v<T, Plane>)
                return {{"size", s.size}, {"shadow_catcher", s.shadow_catcher}};
            else if constexpr (std::is_same_v<T, Ellipsoid>)
                return {{"radii", {s.rx, s.ry, s.rz}}, {"subdivisions", s.subdivisions}};
            else if constexpr (std::is_same_v<T, Sphere>)
                return {{"radius", s.radius}, {"subdivisions", s.subdivisions}};
            else {
                json cps = json::array();
                for (const Vec3& p : s.control_points) cps.push_back(vec_json(p));
                return {{"control_points", cps},
                        {"bevel_radius", s.bevel_radius},
                        {"samples", s.samples},
                        {"sides", s.sides}};
            }
        },
        spec);
}

json renderable_json(WriteCtx& ctx, const std::string& tag, const Renderable& r) {
    json j;
    if (const auto* m = std::get_if<Mesh>(&r)) {
        j["vertices"] = write_array(ctx, flat3(m->geometry.vertices), {m->geometry.vertices.size(), 3}, DType::float64);
        std::vector<double> f;
        f.reserve(m->geometry.faces.size() * 3);
        for (const Face& fc : m->geometry.faces) f.insert(f.end(), {double(fc[0]), double(fc[1]), double(fc[2])});
        j["faces"] = write_array(ctx, f, {m->geometry.faces.size(), 3}, DType::uint32);
        if (m->geometry.has_normals())
            j["normals"] = write_array(ctx, flat3(m->geometry.normals), {m->geometry.normals.size(), 3}, DType::float64);
        j["appearance"] = appearance_json(ctx, m->appearance);
        if (m->segments) {
            std::vector<double> ids(m->segments->ids.begin(), m->segments->ids.end());
            json mats = json::array();
            for (const Material& mat : m->segments->materials) mats.push_back(material_json(mat));
            j["segments"] = {{"ids", write_array(ctx, ids, {ids.size()}, DType::uint32)}, {"materials", mats}};
        }
    } else if (const auto* pc = std::get_if<PointCloud>(&r)) {
        j["points"] = write_array(ctx, flat3(pc->points), {pc->points.size(), 3}, DType::float64);
        j["colors"] = write_array(ctx, flat4(pc->colors, 4), {pc->colors.size(), 4}, DType::float64);
        if (!pc->normals.empty())
            j["normals"] = write_array(ctx, flat3(pc->normals), {pc->normals.size(), 3}, DType::float64);
        j["shape"] = pc->shape == PointShape::cube ? "cube" : "sphere";
        j["radius"] = pc->radius;
        j["emission_strength"] = pc->emission_strength;
        j["material"] = material_json(pc->material);
    } else {
        const auto& p = std::get<Primitive>(r);
        j = primitive_fields(p.spec);
        j["appearance"] = appearance_json(ctx, p.appearance);
    }
    j["kind"] = renderable_kind(r);
    j["tag"] = tag;
    j["pose"] = pose_json(pose_of(r));
    return j;
}

Renderable read_renderable(const ReadCtx& ctx, Obj& o, const std::string& kind) {
    using namespace primitive;
    if (kind == "mesh") {
        Mesh m;
        m.geometry.vertices = to_vec3s(read_array(ctx, o.need("vertices"), o.at("vertices"), {-1, 3}, DType::float64));
        const auto f = read_array(ctx, o.need("faces"), o.at("faces"), {-1, 3}, DType::uint32);
        for (std::size_t i = 0; i < f.shape[0]; ++i)
            m.geometry.faces.push_back({static_cast<std::uint32_t>(f.flat[3 * i]),
                                        static_cast<std::uint32_t>(f.flat[3 * i + 1]),
                                        static_cast<std::uint32_t>(f.flat[3 * i + 2])});
        if (const json* n = o.find("normals"))
            m.geometry.normals = to_vec3s(read_array(ctx, *n, o.at("normals"), {-1, 3}, DType::float64));
        m.appearance = read_appearance(ctx, o);
        if (const json* s = o.find("segments")) {
            Obj so(*s, o.at("segments"));
            const auto ids = read_array(ctx, so.need("ids"), so.at("ids"), {-1}, DType::uint32);
            FaceSegments seg;
            for (double v : ids.flat) seg.ids.push_back(static_cast<std::uint32_t>(v));
            const json& mats = so.need("materials");
            if (!mats.is_array()) schema(so.at("materials"), "expected an array");
            for (std::size_t i = 0; i < mats.size(); ++i)
                seg.materials.push_back(read_material(mats[i], so.at("materials") + "/" + std::to_string(i)));
            so.finish();
            m.segments = std::move(seg);
        }
        m.pose = read_pose(o);
        return m;
    }
    if (kind == "pointcloud") {
        PointCloud pc;
        pc.points = to_vec3s(read_array(ctx, o.need("points"), o.at("points"), {-1, 3}, DType::float64));
        if (const json* c = o.find("colors")) {
            const auto a = read_array(ctx, *c, o.at("colors"), {-1, 4}, DType::float64);
            pc.colors.clear();
            for (std::size_t i = 0; i < a.shape[0]; ++i)
                pc.colors.push_back({a.flat[4 * i], a.flat[4 * i + 1], a.flat[4 * i + 2], a.flat[4 * i + 3]});
        }
        if (const json* n = o.find("normals"))
            pc.normals = to_vec3s(read_array(ctx, *n, o.at("normals"), {-1, 3}, DType::float64));
        if (const json* s = o.find("shape")) {
            const std::string shape = as_str(*s, o.at("shape"));
            if (shape == "sphere") pc.shape = PointShape::sphere;
            else if (shape == "cube") pc.shape = PointShape::cube;
            else schema(o.at("shape"), "unknown point shape '" + shape + "'");
        }
        pc.radius = o.num("radius", pc.radius);
        pc.emission_strength = o.num("emission_strength", pc.emission_strength);
        if (const json* m = o.find("material")) pc.material = read_material(*m, o.at("material"));
        pc.pose = read_pose(o);
        return pc;
    }
    Primitive p;
    constexpr int kMaxCount = 1 << 20;
    if (kind == "cube") {
        p.spec = Cube{o.num("size", Cube{}.size)};
    } else if (kind == "circle") {
        Circle c;
        c.radius = o.num("radius", c.radius);
        c.segments = o.integer("segments", c.segments, 0, kMaxCount);
        p.spec = c;
    } else if (kind == "cylinder") {
        Cylinder c;
        c.radius = o.num("radius", c.radius);
        c.height = o.num("height", c.height);
        c.segments = o.integer("segments", c.segments, 0, kMaxCount);
        p.spec = c;
    } else if (kind == "plane") {
        Plane pl;
        pl.size = o.num("size", pl.size);
        pl.shadow_catcher = o.boolean("shadow_catcher", pl.shadow_catcher);
        p.spec = pl;
    } else if (kind == "ellipsoid") {
        Ellipsoid e;
        const Vec3 r = o.vec3("radii", {e.rx, e.ry, e.rz});
        e.rx = r.x;
        e.ry = r.y;
        e.rz = r.z;
        e.subdivisions = o.integer("subdivisions", e.subdivisions, -1, 64);
        p.spec = e;
    } else if (kind == "sphere") {
        Sphere s;
        s.radius = o.num("radius", s.radius);
        s.subdivisions = o.integer("subdivisions", s.subdivisions, -1, 64);
        p.spec = s;
    } else if (kind == "bezier") {
        Bezier b;
        b.control_points =
            to_vec3s(read_array(ctx, o.need("control_points"), o.at("control_points"), {-1, 3}, DType::float64));
        b.bevel_radius = o.num("bevel_radius", b.bevel_radius);
        b.samples = o.integer("samples", b.samples, 0, kMaxCount);
        b.sides = o.integer("sides", b.sides, 0, kMaxCount);
        p.spec = b;
    } else {
        schema(o.at("kind"), "unknown renderable kind '" + kind + "'");
    }
    p.appearance = read_appearance(ctx, o);
    p.pose = read_pose(o);
    return p;
}

// --------------------------------------------------------------------- lights

json light_json(const std::string& tag, const Light& light) {
    json j = std::visit(
        [](const auto& l) -> json {
            using T = std::decay_t<decltype(l)>;
            json o = {{"color", vec_json(l.color)}, {"strength", l.strength}};
            if constexpr (!std::is_same_v<T, BackgroundLight>) {
                o["cast_shadow"] = l.cast_shadow;
                o["pose"] = pose_json(l.pose);
            }
            if constexpr (std::is_same_v<T, PointLight>) o["radius"] = l.radius;
            if constexpr (std::is_same_v<T, DirectionalLight>) o["angular_diameter"] = l.angular_diameter;
            if constexpr (std::is_same_v<T, SpotLight>) {
                o["cone_angle"] = l.cone_angle;
                o["blend"] = l.blend;
            }
            if constexpr (std::is_same_v<T, AreaLight>) {
                o["shape"] = l.shape == AreaShape::disc ? "disc" : "square";
                o["size"] = l.size;
            }
            return o;
        },
        light);
    j["kind"] = light_kind(light);
    j["tag"] = tag;
    return j;
}

Light read_light(Obj& o, const std::string& kind) {
    auto common = [&](auto& l) {
        l.color = o.vec3("color", l.color);
        l.strength = o.num("strength", l.strength);
        if constexpr (!std::is_same_v<std::decay_t<decltype(l)>, BackgroundLight>) {
            l.cast_shadow = o.boolean("cast_shadow", l.cast_shadow);
            l.pose = read_pose(o);
        }
    };
    if (kind == "background") {
        BackgroundLight l;
        common(l);
        return l;
    }
    if (kind == "point") {
        PointLight l;
        common(l);
        l.radius = o.num("radius", l.radius);
        return l;
    }
    if (kind == "directional") {
        DirectionalLight l;
        common(l);
        l.angular_diameter = o.num("angular_diameter", l.angular_diameter);
        return l;
    }
    if (kind == "spot") {
        SpotLight l;
        common(l);
        l.cone_angle = o.num("cone_angle", l.cone_angle);
        l.blend = o.num("blend", l.blend);
        return l;
    }
    if (kind == "area") {
        AreaLight l;
        common(l);
        if (const json* s = o.find("shape")) {
            const std::string shape = as_str(*s, o.at("shape"));
            if (shape == "square") l.shape = AreaShape::square;
            else if (shape == "disc") l.shape = AreaShape::disc;
            else schema(o.at("shape"), "unknown area shape '" + shape + "'");
        }
        l.size = o.num("size", l.size);
        return l;
    }
    schema(o.at("kind"), "unknown light kind '" + kind + "'");
}

// --------------------------------------------------------- camera/settings

json camera_json(const std::optional<Camera>& cam) {
    if (!cam) return nullptr;
    if (const auto* p = std::get_if<PerspectiveCamera>(&*cam))
        return {{"kind", "perspective"},
                {"focal_px", p->focal_px},
                {"width", p->width},
                {"height", p->height},
                {"pose", pose_json(p->pose)}};
    const auto& o = std::get<OrthographicCamera>(*cam);
    return {{"kind", "orthographic"},
            {"ortho_scale", o.ortho_scale},
            {"width", o.width},
            {"height", o.height},
            {"pose", pose_json(o.pose)}};
}

constexpr int kMaxDim = 1 << 16;

Camera read_camera(const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string kind = o.str("kind");
    Camera cam;
    if (kind == "perspective") {
        const json* f = o.find("focal_px");
        const json* fov = o.find("fov_x");
        if ((f != nullptr) == (fov != nullptr)) schema(path, "perspective camera needs exactly one of focal_px, fov_x");
        const int w = o.integer("width", 640, 1, kMaxDim);
        const int h = o.integer("height", 480, 1, kMaxDim);
        const Pose pose = read_pose(o);
        if (f) {
            cam = PerspectiveCamera{as_num(*f, o.at("focal_px")), w, h, pose};
        } else {
            const double fx = as_num(*fov, o.at("fov_x"));
            cam = at_path(o.at("fov_x"), [&] { return PerspectiveCamera::from_fov(fx, w, h, pose); });
        }
    } else if (kind == "orthographic") {
        OrthographicCamera c;
        c.ortho_scale = o.num("ortho_scale", c.ortho_scale);
        c.width = o.integer("width", c.width, 1, kMaxDim);
        c.height = o.integer("height", c.height, 1, kMaxDim);
        c.pose = read_pose(o);
        cam = c;
    } else {
        schema(o.at("kind"), "unknown camera kind '" + kind + "'");
    }
    o.finish();
    at_path(path, [&] { validate_camera(cam); });
    return cam;
}

json settings_json(const RenderSettings& s) {
    return {{"width", s.width},
            {"height", s.height},
            {"samples_per_pixel", s.samples_per_pixel},
            {"max_bounces", s.max_bounces},
            {"seed", s.seed},
            {"passes", {{"color", s.passes.color}, {"depth", s.passes.depth}, {"albedo", s.passes.albedo}}}};
}

RenderSettings read_settings(const json& j, const std::string& path) {
    Obj o(j, path);
    RenderSettings s;
    s.width = o.integer("width", s.width, 1, kMaxDim);
    s.height = o.integer("height", s.height, 1, kMaxDim);
    s.samples_per_pixel = o.integer("samples_per_pixel", s.samples_per_pixel, 1, 1 << 24);
    s.max_bounces = o.integer("max_bounces", s.max_bounces, 1, 1 << 10);
    if (const json* seed = o.find("seed")) s.seed = as_u64(*seed, o.at("seed"));
    if (const json* p = o.find("passes")) {
        Obj po(*p, o.at("passes"));
        s.passes.color = po.boolean("color", s.passes.color);
        s.passes.depth = po.boolean("depth", s.passes.depth);
        s.passes.albedo = po.boolean("albedo", s.passes.albedo);
        po.finish();
    }
    o.finish();
    at_path(path, [&] { validate_settings(s); });
    return s;
}

// --------------------------------------------------------------------- scene

json scene_json(const Scene& scene, WriteCtx& ctx) {
    json rs = json::array();
    for (const auto& [tag, r] : scene.renderables()) rs.push_back(renderable_json(ctx, tag, r));
    json ls = json::array();
    for (const auto& [tag, l] : scene.lights()) ls.push_back(light_json(tag, l));
    return {{"version", kVersion},
            {"settings", settings_json(scene.settings)},
            {"camera", camera_json(scene.camera())},
            {"renderables", rs},
            {"lights", ls}};
}

void check_version(Obj& o) {
    const long long v = as_int(o.need("version"), o.at("version"), std::numeric_limits<int>::min(),
                               std::numeric_limits<int>::max());
    if (v != kVersion)
        throw Error(ErrorCode::unsupported, o.at("version") + ": unsupported document version " + std::to_string(v));
}

Scene scene_from_json(const json& doc, const ReadCtx& ctx) {
    Obj root(doc, "");
    check_version(root);
    Scene scene;
    if (const json* s = root.find("settings")) scene.settings = read_settings(*s, root.at("settings"));
    if (const json* c = root.find("camera"); c && !c->is_null()) scene.set_camera(read_camera(*c, root.at("camera")));
    auto items = [&](const char* key, auto&& fn) {
        const json* arr = root.find(key);
        if (!arr) return;
        if (!arr->is_array()) schema(root.at(key), "expected an array");
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const std::string p = root.at(key) + "/" + std::to_string(i);
            Obj o((*arr)[i], p);
            const std::string kind = o.str("kind");
            std::optional<std::string> tag;
            if (const json* t = o.find("tag")) tag = as_str(*t, o.at("tag"));
            fn(o, kind, tag, p);
        }
    };
    items("renderables", [&](Obj& o, const std::string& kind, const std::optional<std::string>& tag,
                             const std::string& p) {
        Renderable r = read_renderable(ctx, o, kind);
        o.finish();
        at_path(p, [&] { return scene.add_renderable(std::move(r), tag); });
    });
    items("lights", [&](Obj& o, const std::string& kind, const std::optional<std::string>& tag,
                        const std::string& p) {
        Light l = read_light(o, kind);
        o.finish();
        at_path(p, [&] { return scene.add_light(std::move(l), tag); });
    });
    root.finish();
    return scene;
}

std::string sidecar_stem(const fs::path& path) {
    std::string name = path.filename().string();
    for (const char* ext : {".json", ".scene"})
        if (name.size() > std::strlen(ext) && name.compare(name.size() - std::strlen(ext), std::string::npos, ext) == 0)
            name.resize(name.size() - std::strlen(ext));
    return name;
}

fs::path dir_of(const std::string& path) {
    fs::path d = fs::path(path).parent_path();
    return d.empty() ? fs::path(".") : d;
}

}  // namespace

void save_scene(const Scene& scene, const std::string& path, std::size_t inline_limit) {
    WriteCtx ctx;
    ctx.sidecars = true;
    ctx.inline_limit = inline_limit;
    ctx.dir = dir_of(path);
    ctx.stem = sidecar_stem(path);
    const std::string text = to_text(scene_json(scene, ctx));
    for (const auto& [file, bytes] : ctx.files) write_file(file.string(), bytes);
    write_file(path, text);
}

Scene load_scene(const std::string& path) {
    return scene_from_json(parse_text(read_file(path)), ReadCtx{dir_of(path)});
}

std::string scene_to_string(const Scene& scene) {
    WriteCtx ctx;
    ctx.dir = ".";
    return to_text(scene_json(scene, ctx));
}

Scene scene_from_string(std::string_view text, const std::string& base_dir) {
    return scene_from_json(parse_text(text), ReadCtx{base_dir.empty() ? fs::path(".") : fs::path(base_dir)});
}

// ---------------------------------------------------------- trajectory docs

namespace {

json timed_pose_json(double time, const Vec3& position, const Quat& q) {
    return {{"time", time}, {"position", vec_json(position)}, {"rotation", quat_json(q)}};
}

template <class F>
void read_timed(const json& doc, const char* key, F&& fn) {
    Obj root(doc, "");
    check_version(root);
    const json& arr = root.need(key);
    if (!arr.is_array()) schema(root.at(key), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Obj o(arr[i], root.at(key) + "/" + std::to_string(i));
        const double t = o.num("time");
        const Vec3 p = as_vec3(o.need("position"), o.at("position"));
        const Quat q = read_rotation(o.need("rotation"), o.at("rotation"));
        o.finish();
        fn(t, p, q, o.path());
    }
    root.finish();
}

}  // namespace

Trajectory keypoints_from_string(std::string_view text) {
    Trajectory traj;
    read_timed(parse_text(text), "keypoints", [&](double t, const Vec3& p, const Quat& q, const std::string& path) {
        at_path(path, [&] { traj.add_keypoint({t, p, q}); });
    });
    return traj;
}

Trajectory load_keypoints(const std::string& path) { return keypoints_from_string(read_file(path)); }

std::string keypoints_to_string(const Trajectory& traj) {
    json arr = json::array();
    for (const Keypoint& k : traj.keypoints()) arr.push_back(timed_pose_json(k.time, k.position, k.rotation));
    return to_text({{"version", kVersion}, {"keypoints", arr}});
}

std::string frames_to_string(const std::vector<Frame>& frames) {
    json arr = json::array();
    for (const Frame& f : frames) arr.push_back(timed_pose_json(f.time, f.pose.position, f.pose.rotation));
    return to_text({{"version", kVersion}, {"frames", arr}});
}

std::vector<Frame> frames_from_string(std::string_view text) {
    std::vector<Frame> out;
    read_timed(parse_text(text), "frames", [&](double t, const Vec3& p, const Quat& q, const std::string&) {
        out.push_back({t, {p, q}});
    });
    return out;
}

}  // namespace scirender
