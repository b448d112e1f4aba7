#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <string>

#include "scirender/error.hpp"
#include "scirender/io.hpp"

namespace scirender {

namespace {

enum class Type { i8, u8, i16, u16, i32, u32, f32, f64 };

int type_size(Type t) {
    switch (t) {
        case Type::i8:
        case Type::u8: return 1;
        case Type::i16:
        case Type::u16: return 2;
        case Type::i32:
        case Type::u32:
        case Type::f32: return 4;
        default: return 8;
    }
}

Type parse_type(const std::string& s) {
    if (s == "char" || s == "int8") return Type::i8;
    if (s == "uchar" || s == "uint8") return Type::u8;
    if (s == "short" || s == "int16") return Type::i16;
    if (s == "ushort" || s == "uint16") return Type::u16;
    if (s == "int" || s == "int32") return Type::i32;
    if (s == "uint" || s == "uint32") return Type::u32;
    if (s == "float" || s == "float32") return Type::f32;
    if (s == "double" || s == "float64") return Type::f64;
    throw Error(ErrorCode::parse_error, "unknown PLY property type '" + s + "'");
}

struct Property {
    std::string name;
    Type type = Type::f32;
    bool list = false;
    Type count_type = Type::u8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> props;
};

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t s = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (s < i) out.emplace_back(line.substr(s, i - s));
    }
    return out;
}

// Reads values either from ASCII tokens or little-endian binary.
class Cursor {
public:
    Cursor(std::string_view body, bool ascii) : body_(body), ascii_(ascii) {}

    double read(Type t) {
        if (ascii_) return read_ascii();
        const int n = type_size(t);
        if (body_.size() - pos_ < static_cast<std::size_t>(n))
            throw Error(ErrorCode::parse_error, "PLY data truncated");
        unsigned char b[8];
        std::memcpy(b, body_.data() + pos_, n);
        pos_ += n;
        switch (t) {
            case Type::i8: return static_cast<std::int8_t>(b[0]);
            case Type::u8: return b[0];
            case Type::i16: {
                std::int16_t v;
                std::memcpy(&v, b, 2);
                return v;
            }
            case Type::u16: {
                std::uint16_t v;
                std::memcpy(&v, b, 2);
                return v;
            }
            case Type::i32: {
                std::int32_t v;
                std::memcpy(&v, b, 4);
                return v;
            }
            case Type::u32: {
                std::uint32_t v;
                std::memcpy(&v, b, 4);
                return v;
            }
            case Type::f32: {
                float v;
                std::memcpy(&v, b, 4);
                return v;
            }
            default: {
                double v;
                std::memcpy(&v, b, 8);
                return v;
            }
        }
    }

    std::size_t remaining() const { return body_.size() - pos_; }

private:
    double read_ascii() {
        while (pos_ < body_.size() && std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
        if (pos_ >= body_.size()) throw Error(ErrorCode::parse_error, "PLY data truncated");
        const char* b = body_.data() + pos_;
        const char* e = body_.data() + body_.size();
        double v = 0;
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || (p < e && !std::isspace(static_cast<unsigned char>(*p))))
            throw Error(ErrorCode::parse_error, "malformed PLY number");
        pos_ = static_cast<std::size_t>(p - body_.data());
        return v;
    }

    std::string_view body_;
    std::size_t pos_ = 0;
    bool ascii_;
};

double color_value(Type t, double v) { return (t == Type::f32 || t == Type::f64) ? v : v / 255.0; }

}  // namespace

PlyData parse_ply(std::string_view bytes) {
    // Header.
    std::size_t pos = 0;
    auto next_line = [&]() -> std::string_view {
        if (pos >= bytes.size()) throw Error(ErrorCode::parse_error, "malformed PLY header: missing end_header");
        std::size_t e = bytes.find('\n', pos);
        if (e == std::string_view::npos) e = bytes.size();
        std::string_view line = bytes.substr(pos, e - pos);
        pos = e + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        return line;
    };
    if (next_line() != "ply") throw Error(ErrorCode::parse_error, "malformed PLY header: missing magic");
    bool ascii = false, have_format = false;
    std::vector<Element> elements;
    for (;;) {
        const auto tok = split_ws(next_line());
        if (tok.empty()) continue;
        if (tok[0] == "end_header") break;
        if (tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "format") {
            if (tok.size() < 2) throw Error(ErrorCode::parse_error, "malformed PLY format line");
            if (tok[1] == "ascii") ascii = true;
            else if (tok[1] == "binary_little_endian") ascii = false;
            else if (tok[1] == "binary_big_endian")
                throw Error(ErrorCode::unsupported, "big-endian PLY is not supported");
            else
                throw Error(ErrorCode::parse_error, "unknown PLY format '" + tok[1] + "'");
            have_format = true;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw Error(ErrorCode::parse_error, "malformed PLY element line");
            Element el;
            el.name = tok[1];
            auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), el.count);
            if (ec != std::errc() || p != tok[2].data() + tok[2].size())
                throw Error(ErrorCode::parse_error, "malformed PLY element count");
            elements.push_back(el);
        } else if (tok[0] == "property") {
            if (elements.empty()) throw Error(ErrorCode::parse_error, "PLY property before any element");
            Property pr;
            if (tok.size() == 5 && tok[1] == "list") {
                pr.list = true;
                pr.count_type = parse_type(tok[2]);
                pr.type = parse_type(tok[3]);
                pr.name = tok[4];
            } else if (tok.size() == 3) {
                pr.type = parse_type(tok[1]);
                pr.name = tok[2];
            } else {
                throw Error(ErrorCode::parse_error, "malformed PLY property line");
            }
            elements.back().props.push_back(pr);
        } else {
            throw Error(ErrorCode::parse_error, "unexpected PLY header keyword '" + tok[0] + "'");
        }
    }
    if (!have_format) throw Error(ErrorCode::parse_error, "PLY header has no format line");

    Cursor cur(pos <= bytes.size() ? bytes.substr(pos) : std::string_view{}, ascii);
    PlyData out;
    bool have_vertex = false;
    for (const Element& el : elements) {
        std::size_t min_bytes = 0;
        for (const Property& p : el.props) min_bytes += p.list ? type_size(p.count_type) : type_size(p.type);
        // Each ASCII value needs at least two bytes (digit + separator).
        const std::size_t per = ascii ? 2 * el.props.size() : min_bytes;
        if (per > 0 && el.count > (cur.remaining() + (ascii ? 1 : 0)) / per)
            throw Error(ErrorCode::parse_error, "PLY element '" + el.name + "' truncated: header declares " +
                                                    std::to_string(el.count) + " entries");
        if (el.name == "vertex") {
            have_vertex = true;
            int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ir = -1, ig = -1, ib = -1, ia = -1;
            for (int i = 0; i < static_cast<int>(el.props.size()); ++i) {
                const std::string& n = el.props[i].name;
                if (el.props[i].list) continue;
                if (n == "x") ix = i;
                else if (n == "y") iy = i;
                else if (n == "z") iz = i;
                else if (n == "nx") inx = i;
                else if (n == "ny") iny = i;
                else if (n == "nz") inz = i;
                else if (n == "red" || n == "r") ir = i;
                else if (n == "green" || n == "g") ig = i;
                else if (n == "blue" || n == "b") ib = i;
                else if (n == "alpha" || n == "a") ia = i;
            }
            if (ix < 0 || iy < 0 || iz < 0) throw Error(ErrorCode::parse_error, "PLY vertex element lacks x/y/z");
            const bool normals = inx >= 0 && iny >= 0 && inz >= 0;
            const bool colors = ir >= 0 && ig >= 0 && ib >= 0;
            out.has_alpha = colors && ia >= 0;
            out.vertices.resize(el.count);
            if (normals) out.normals.resize(el.count);
            if (colors) out.colors.resize(el.count);
            std::vector<double> vals(el.props.size());
            for (std::size_t v = 0; v < el.count; ++v) {
                for (std::size_t i = 0; i < el.props.size(); ++i) {
                    const Property& p = el.props[i];
                    if (p.list) {
                        const double c = cur.read(p.count_type);
                        if (!(c >= 0) || c > 1e6) throw Error(ErrorCode::parse_error, "bad PLY list length");
                        for (int k = 0; k < static_cast<int>(c); ++k) cur.read(p.type);
                        vals[i] = 0;
                    } else {
                        vals[i] = cur.read(p.type);
                    }
                }
                out.vertices[v] = {vals[ix], vals[iy], vals[iz]};
                if (normals) out.normals[v] = {vals[inx], vals[iny], vals[inz]};
                if (colors) {
                    out.colors[v] = {color_value(el.props[ir].type, vals[ir]), color_value(el.props[ig].type, vals[ig]),
                                     color_value(el.props[ib].type, vals[ib]),
                                     ia >= 0 ? color_value(el.props[ia].type, vals[ia]) : 1.0};
                }
            }
        } else if (el.name == "face") {
            out.has_faces = true;
            int il = -1;
            for (int i = 0; i < static_cast<int>(el.props.size()); ++i)
                if (el.props[i].list && (el.props[i].name == "vertex_indices" || el.props[i].name == "vertex_index"))
                    il = i;
            if (il < 0) throw Error(ErrorCode::parse_error, "PLY face element lacks vertex_indices");
            out.faces.reserve(el.count);
            std::vector<std::uint32_t> poly;
            for (std::size_t f = 0; f < el.count; ++f) {
                for (int i = 0; i < static_cast<int>(el.props.size()); ++i) {
                    const Property& p = el.props[i];
                    if (!p.list) {
                        cur.read(p.type);
                        continue;
                    }
                    const double c = cur.read(p.count_type);
                    if (!(c >= 0) || c > 1e6) throw Error(ErrorCode::parse_error, "bad PLY list length");
                    const int cnt = static_cast<int>(c);
                    poly.clear();
                    for (int k = 0; k < cnt; ++k) {
                        const double idx = cur.read(p.type);
                        if (i == il) {
                            if (!(idx >= 0) || idx > 4294967295.0 || idx != std::floor(idx))
                                throw Error(ErrorCode::parse_error, "bad PLY vertex index");
                            poly.push_back(static_cast<std::uint32_t>(idx));
                        }
                    }
                    if (i == il) {
                        if (cnt < 3) throw Error(ErrorCode::parse_error, "PLY face with fewer than 3 vertices");
                        for (int k = 1; k + 1 < cnt; ++k) out.faces.push_back({poly[0], poly[k], poly[k + 1]});
                    }
                }
            }
        } else if (!el.props.empty()) {
            for (std::size_t e = 0; e < el.count; ++e)
                for (const Property& p : el.props) {
                    if (p.list) {
                        const double c = cur.read(p.count_type);
                        if (!(c >= 0) || c > 1e6) throw Error(ErrorCode::parse_error, "bad PLY list length");
                        for (int k = 0; k < static_cast<int>(c); ++k) cur.read(p.type);
                    } else {
                        cur.read(p.type);
                    }
                }
        }
    }
    if (!have_vertex) throw Error(ErrorCode::parse_error, "PLY has no vertex element");
    for (const Face& f : out.faces)
        for (std::uint32_t i : f)
            if (i >= out.vertices.size()) throw Error(ErrorCode::parse_error, "PLY face index out of range");
    return out;
}

PlyData read_ply(const std::string& path) { return parse_ply(read_file(path)); }

namespace {

std::uint8_t to_u8(double c) { return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0)); }

template <class T>
void put(std::string& out, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.append(b, sizeof(T));
}

std::string fmt17(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace

std::string encode_ply(const PlyData& ply, PlyFormat format) {
    const bool normals = !ply.normals.empty(), colors = !ply.colors.empty();
    if (normals && ply.normals.size() != ply.vertices.size())
        throw Error(ErrorCode::invalid_argument, "normals must match the vertex count");
    if (colors && ply.colors.size() != ply.vertices.size())
        throw Error(ErrorCode::invalid_argument, "colors must match the vertex count");
    const bool ascii = format == PlyFormat::ascii;
    std::string out = "ply\nformat ";
    out += ascii ? "ascii 1.0\n" : "binary_little_endian 1.0\n";
    out += "element vertex " + std::to_string(ply.vertices.size()) + "\n";
    out += "property double x\nproperty double y\nproperty double z\n";
    if (normals) out += "property double nx\nproperty double ny\nproperty double nz\n";
    if (colors) {
        out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
        if (ply.has_alpha) out += "property uchar alpha\n";
    }
    const bool faces = ply.has_faces || !ply.faces.empty();
    if (faces) out += "element face " + std::to_string(ply.faces.size()) + "\nproperty list uchar uint vertex_indices\n";
    out += "end_header\n";
    for (std::size_t i = 0; i < ply.vertices.size(); ++i) {
        std::vector<double> d{ply.vertices[i].x, ply.vertices[i].y, ply.vertices[i].z};
        if (normals) d.insert(d.end(), {ply.normals[i].x, ply.normals[i].y, ply.normals[i].z});
        std::vector<std::uint8_t> c;
        if (colors) {
            const Vec4& col = ply.colors[i];
            c = {to_u8(col.x), to_u8(col.y), to_u8(col.z)};
            if (ply.has_alpha) c.push_back(to_u8(col.w));
        }
        if (ascii) {
            std::string line;
            for (double v : d) line += fmt17(v) + " ";
            for (std::uint8_t v : c) line += std::to_string(v) + " ";
            line.back() = '\n';
            out += line;
        } else {
            for (double v : d) put(out, v);
            for (std::uint8_t v : c) put(out, v);
        }
    }
    for (const Face& f : ply.faces) {
        if (ascii) {
            out += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " + std::to_string(f[2]) + "\n";
        } else {
            put(out, static_cast<std::uint8_t>(3));
            for (std::uint32_t i : f) put(out, i);
        }
    }
    return out;
}

void write_ply(const PlyData& ply, const std::string& path, PlyFormat format) {
    write_file(path, encode_ply(ply, format));
}

std::variant<PointCloud, Mesh> load_ply(const std::string& path) {
    PlyData ply = read_ply(path);
    if (ply.has_faces) {
        Mesh m;
        m.geometry.vertices = std::move(ply.vertices);
        m.geometry.faces = std::move(ply.faces);
        if (!ply.normals.empty()) {
            m.geometry.normals = std::move(ply.normals);
            for (Vec3& n : m.geometry.normals) {
                const double l = length(n);
                if (l > 0) n = n / l;
            }
        }
        if (!ply.colors.empty()) {
            auto& vc = m.appearance.colors.emplace<VertexColors>();
            vc.rgba = std::move(ply.colors);
            vc.channels = ply.has_alpha ? 4 : 3;
        }
        return m;
    }
    PointCloud pc;
    pc.points = std::move(ply.vertices);
    pc.normals = std::move(ply.normals);
    if (!ply.colors.empty()) pc.colors = std::move(ply.colors);
    return pc;
}

}  // namespace scirender
