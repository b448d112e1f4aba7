#include <charconv>
#include <filesystem>
#include <string>

#include "scirender/error.hpp"
#include "scirender/io.hpp"

namespace scirender {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> tokens(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        const std::size_t b = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (b < i) out.push_back(s.substr(b, i - b));
    }
    return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw Error(ErrorCode::parse_error, "OBJ line " + std::to_string(line) + ": " + what);
}

double number(std::string_view t, std::size_t line) {
    double v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) fail(line, "malformed number '" + std::string(t) + "'");
    return v;
}

std::uint32_t resolve(std::string_view t, std::size_t count, std::size_t line) {
    long long i = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), i);
    if (ec != std::errc() || p != t.data() + t.size()) fail(line, "malformed index '" + std::string(t) + "'");
    long long r;
    if (i > 0) r = i - 1;
    else if (i < 0) r = static_cast<long long>(count) + i;
    else fail(line, "index 0 is invalid");
    if (r < 0 || r >= static_cast<long long>(count)) fail(line, "index " + std::to_string(i) + " out of range");
    return static_cast<std::uint32_t>(r);
}

}  // namespace

ObjData parse_obj(std::string_view text) {
    ObjData out;
    std::vector<Vec2> vts;
    std::vector<std::array<Vec2, 3>> fuv;
    bool all_uv = true;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        std::size_t e = text.find('\n', pos);
        if (e == std::string_view::npos) e = text.size();
        std::string_view line = text.substr(pos, e - pos);
        pos = e + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto tok = tokens(line);
        const std::string_view kw = tok[0];
        if (kw == "v") {
            if (tok.size() < 4) fail(line_no, "vertex needs 3 coordinates");
            out.mesh.vertices.push_back({number(tok[1], line_no), number(tok[2], line_no), number(tok[3], line_no)});
        } else if (kw == "vt") {
            if (tok.size() < 3) fail(line_no, "texture coordinate needs 2 values");
            vts.push_back({number(tok[1], line_no), number(tok[2], line_no)});
        } else if (kw == "f") {
            if (tok.size() < 4) fail(line_no, "face needs at least 3 vertices");
            int style = -1;
            std::vector<std::uint32_t> vi;
            std::vector<Vec2> ti;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const std::string_view t = tok[k];
                const auto s1 = t.find('/');
                std::string_view a = t.substr(0, s1), b, c;
                int st = 0;
                if (s1 != std::string_view::npos) {
                    const auto s2 = t.find('/', s1 + 1);
                    b = t.substr(s1 + 1, s2 == std::string_view::npos ? std::string_view::npos : s2 - s1 - 1);
                    if (s2 != std::string_view::npos) {
                        c = t.substr(s2 + 1);
                        st = b.empty() ? 2 : 3;
                    } else {
                        st = 1;
                    }
                    if ((st == 1 || st == 3) && b.empty()) fail(line_no, "empty texture index");
                    if (st >= 2 && c.empty()) fail(line_no, "empty normal index");
                }
                if (style >= 0 && st != style) fail(line_no, "mixed indexing styles within a face");
                style = st;
                vi.push_back(resolve(a, out.mesh.vertices.size(), line_no));
                if (st == 1 || st == 3) ti.push_back(vts[resolve(b, vts.size(), line_no)]);
            }
            const bool has_uv = style == 1 || style == 3;
            if (!has_uv) all_uv = false;
            for (std::size_t k = 1; k + 1 < vi.size(); ++k) {
                out.mesh.faces.push_back({vi[0], vi[k], vi[k + 1]});
                if (has_uv) fuv.push_back({ti[0], ti[k], ti[k + 1]});
            }
        } else if (kw == "mtllib") {
            if (tok.size() >= 2) out.mtllib = std::string(tok[1]);
        }
        // vn, o, g, s, usemtl and anything else are ignored.
    }
    if (all_uv && !out.mesh.faces.empty()) out.uv = FacesUV{std::move(fuv)};
    return out;
}

ObjData read_obj(const std::string& path) { return parse_obj(read_file(path)); }

namespace {

void append_num(std::string& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, p);
}

}  // namespace

std::string encode_obj(const TriMesh& mesh, const FacesUV* uv, const std::string& mtllib) {
    if (uv && uv->uv.size() != mesh.faces.size())
        throw Error(ErrorCode::invalid_argument, "faces_uv must have one entry per face");
    std::string out;
    if (!mtllib.empty()) out += "mtllib " + mtllib + "\nusemtl material0\n";
    for (const Vec3& v : mesh.vertices) {
        out += "v ";
        append_num(out, v.x);
        out += ' ';
        append_num(out, v.y);
        out += ' ';
        append_num(out, v.z);
        out += '\n';
    }
    if (uv) {
        for (const auto& tri : uv->uv)
            for (const Vec2& t : tri) {
                out += "vt ";
                append_num(out, t.x);
                out += ' ';
                append_num(out, t.y);
                out += '\n';
            }
    }
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        out += 'f';
        for (int k = 0; k < 3; ++k) {
            out += ' ' + std::to_string(mesh.faces[f][k] + 1);
            if (uv) out += '/' + std::to_string(3 * f + k + 1);
        }
        out += '\n';
    }
    return out;
}

void write_obj(const TriMesh& mesh, const FacesUV* uv, const std::string& path, const std::string& texture_file) {
    std::string mtllib;
    if (!texture_file.empty()) {
        const std::filesystem::path p(path);
        const std::filesystem::path mtl = std::filesystem::path(p).replace_extension(".mtl");
        mtllib = mtl.filename().string();
        write_file(mtl.string(), "newmtl material0\nKd 1 1 1\nmap_Kd " + texture_file + "\n");
    }
    write_file(path, encode_obj(mesh, uv, mtllib));
}

}  // namespace scirender
