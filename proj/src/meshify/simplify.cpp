#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "scirender/bvh.hpp"
#include "scirender/error.hpp"
#include "scirender/meshify.hpp"

namespace scirender {

namespace {

// Symmetric 4x4 quadric, upper triangle row by row.
struct Quadric {
    std::array<double, 10> q{};

    void add_plane(const Vec3& n, double d, double w) {
        const double v[4] = {n.x, n.y, n.z, d};
        int k = 0;
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) q[k++] += w * v[i] * v[j];
    }
    Quadric operator+(const Quadric& o) const {
        Quadric r;
        for (int i = 0; i < 10; ++i) r.q[i] = q[i] + o.q[i];
        return r;
    }
    double eval(const Vec3& p) const {
        const double x = p.x, y = p.y, z = p.z;
        return q[0] * x * x + 2 * q[1] * x * y + 2 * q[2] * x * z + 2 * q[3] * x + q[4] * y * y +
               2 * q[5] * y * z + 2 * q[6] * y + q[7] * z * z + 2 * q[8] * z + q[9];
    }
    // Minimizer of eval, if the 3x3 block is well conditioned.
    bool optimum(Vec3& out) const {
        const double a = q[0], b = q[1], c = q[2], d = q[4], e = q[5], f = q[7];
        const double det = a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d);
        const double scale = std::max({std::abs(a), std::abs(d), std::abs(f), 1e-300});
        if (!(std::abs(det) > 1e-10 * scale * scale * scale)) return false;
        const double i00 = d * f - e * e, i01 = c * e - b * f, i02 = b * e - c * d;
        const double i11 = a * f - c * c, i12 = b * c - a * e, i22 = a * d - b * b;
        const double rx = -q[3], ry = -q[6], rz = -q[8];
        out = {(i00 * rx + i01 * ry + i02 * rz) / det, (i01 * rx + i11 * ry + i12 * rz) / det,
               (i02 * rx + i12 * ry + i22 * rz) / det};
        return is_finite(out);
    }
};

constexpr double kBoundaryWeight = 1000.0;

struct Entry {
    double cost;
    std::uint32_t u, v;
    std::uint64_t su, sv;
    Vec3 target;
    bool operator>(const Entry& o) const {
        if (cost != o.cost) return cost > o.cost;
        if (u != o.u) return u > o.u;
        return v > o.v;
    }
};

class Simplifier {
public:
    explicit Simplifier(const TriMesh& m) : pos_(m.vertices), faces_(m.faces) {
        const std::size_t nv = pos_.size();
        alive_v_.assign(nv, true);
        alive_f_.assign(faces_.size(), true);
        stamp_.assign(nv, 0);
        quad_.assign(nv, {});
        inc_.assign(nv, {});
        Aabb box;
        for (const Vec3& p : pos_) box.expand(p);
        const double diag = pos_.empty() ? 1.0 : std::max(length(box.hi - box.lo), 1e-300);
        eps_ = 1e-12 * diag * diag * diag * diag;

        std::map<std::uint64_t, std::array<std::uint32_t, 3>> edge_faces;  // count, face, opposite
        for (std::uint32_t f = 0; f < faces_.size(); ++f) {
            const Face& fc = faces_[f];
            for (int k = 0; k < 3; ++k) inc_[fc[k]].push_back(f);
            const Vec3 n = cross(pos_[fc[1]] - pos_[fc[0]], pos_[fc[2]] - pos_[fc[0]]);
            const double len = length(n);
            if (len > 0) {
                const Vec3 un = n / len;
                const double area = 0.5 * len;
                for (int k = 0; k < 3; ++k) quad_[fc[k]].add_plane(un, -dot(un, pos_[fc[0]]), area);
            }
            for (int k = 0; k < 3; ++k) {
                const std::uint32_t a = fc[k], b = fc[(k + 1) % 3];
                auto& e = edge_faces[key(a, b)];
                ++e[0];
                e[1] = f;
            }
        }
        for (const auto& [k, e] : edge_faces) {
            if (e[0] != 1) continue;
            const std::uint32_t a = static_cast<std::uint32_t>(k >> 32), b = static_cast<std::uint32_t>(k);
            const Face& fc = faces_[e[1]];
            const Vec3 fn = cross(pos_[fc[1]] - pos_[fc[0]], pos_[fc[2]] - pos_[fc[0]]);
            const Vec3 edge = pos_[b] - pos_[a];
            const Vec3 bn = cross(edge, fn);
            const double len = length(bn);
            if (!(len > 0)) continue;
            const Vec3 un = bn / len;
            const double w = kBoundaryWeight * length_squared(edge);
            quad_[a].add_plane(un, -dot(un, pos_[a]), w);
            quad_[b].add_plane(un, -dot(un, pos_[a]), w);
        }
        live_faces_ = faces_.size();
        for (const auto& [k, e] : edge_faces) push(static_cast<std::uint32_t>(k >> 32), static_cast<std::uint32_t>(k));
    }

    bool run(std::size_t target) {
        while (live_faces_ > target && !heap_.empty()) {
            const Entry e = heap_.top();
            heap_.pop();
            if (!alive_v_[e.u] || !alive_v_[e.v] || stamp_[e.u] != e.su || stamp_[e.v] != e.sv) continue;
            collapse(e);
        }
        return live_faces_ <= target;
    }

    TriMesh result() const {
        TriMesh out;
        std::vector<std::uint32_t> remap(pos_.size(), UINT32_MAX);
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            if (!alive_f_[f]) continue;
            Face nf;
            for (int k = 0; k < 3; ++k) {
                std::uint32_t& r = remap[faces_[f][k]];
                if (r == UINT32_MAX) {
                    r = static_cast<std::uint32_t>(out.vertices.size());
                    out.vertices.push_back(pos_[faces_[f][k]]);
                }
                nf[k] = r;
            }
            out.faces.push_back(nf);
        }
        return out;
    }

private:
    static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
        return a < b ? (std::uint64_t{a} << 32 | b) : (std::uint64_t{b} << 32 | a);
    }

    void push(std::uint32_t a, std::uint32_t b) {
        const std::uint32_t u = std::min(a, b), v = std::max(a, b);
        const Quadric q = quad_[u] + quad_[v];
        const Vec3 mid = (pos_[u] + pos_[v]) * 0.5;
        Vec3 best = pos_[u];
        double cost = q.eval(best);
        for (const Vec3& c : {pos_[v], mid}) {
            const double e = q.eval(c);
            if (e < cost) {
                cost = e;
                best = c;
            }
        }
        Vec3 opt;
        if (q.optimum(opt)) {
            const double e = q.eval(opt);
            if (e < cost - eps_) {
                cost = e;
                best = opt;
            }
        }
        heap_.push({std::max(cost, 0.0), u, v, stamp_[u], stamp_[v], best});
    }

    std::set<std::uint32_t> ring(std::uint32_t v) const {
        std::set<std::uint32_t> r;
        for (std::uint32_t f : inc_[v])
            for (std::uint32_t w : faces_[f])
                if (w != v) r.insert(w);
        return r;
    }

    bool on_boundary(std::uint32_t v) const {
        std::map<std::uint32_t, int> count;
        for (std::uint32_t f : inc_[v])
            for (std::uint32_t w : faces_[f])
                if (w != v) ++count[w];
        for (const auto& [w, c] : count)
            if (c == 1) return true;
        return false;
    }

    void collapse(const Entry& e) {
        const std::uint32_t u = e.u, v = e.v;
        std::vector<std::uint32_t> shared, opposite;
        for (std::uint32_t f : inc_[u]) {
            const Face& fc = faces_[f];
            if (fc[0] == v || fc[1] == v || fc[2] == v) {
                shared.push_back(f);
                for (std::uint32_t w : fc)
                    if (w != u && w != v) opposite.push_back(w);
            }
        }
        if (shared.empty()) return;
        // Link condition: the rings of u and v meet only at the opposite vertices.
        const auto ru = ring(u), rv = ring(v);
        std::vector<std::uint32_t> common;
        std::set_intersection(ru.begin(), ru.end(), rv.begin(), rv.end(), std::back_inserter(common));
        std::sort(opposite.begin(), opposite.end());
        if (common != opposite) return;
        if (shared.size() == 2 && on_boundary(u) && on_boundary(v)) return;
        if (live_faces_ - shared.size() < 4) return;

        for (std::uint32_t w : {u, v}) {
            for (std::uint32_t f : inc_[w]) {
                if (std::find(shared.begin(), shared.end(), f) != shared.end()) continue;
                Face fc = faces_[f];
                std::array<Vec3, 3> p{pos_[fc[0]], pos_[fc[1]], pos_[fc[2]]};
                const Vec3 before = cross(p[1] - p[0], p[2] - p[0]);
                for (int k = 0; k < 3; ++k)
                    if (fc[k] == u || fc[k] == v) p[k] = e.target;
                const Vec3 after = cross(p[1] - p[0], p[2] - p[0]);
                const double l2 = std::max({length_squared(p[1] - p[0]), length_squared(p[2] - p[1]),
                                            length_squared(p[0] - p[2])});
                if (!(length_squared(after) > 1e-20 * l2 * l2)) return;
                if (!(dot(before, after) > 0)) return;
            }
        }

        for (std::uint32_t f : shared) {
            alive_f_[f] = false;
            --live_faces_;
        }
        std::vector<std::uint32_t> merged;
        for (std::uint32_t w : {u, v})
            for (std::uint32_t f : inc_[w]) {
                if (!alive_f_[f]) continue;
                for (auto& x : faces_[f])
                    if (x == v) x = u;
                merged.push_back(f);
            }
        std::sort(merged.begin(), merged.end());
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        for (std::uint32_t w : opposite) {
            auto& lst = inc_[w];
            lst.erase(std::remove_if(lst.begin(), lst.end(), [&](std::uint32_t f) { return !alive_f_[f]; }),
                      lst.end());
        }
        inc_[u] = std::move(merged);
        inc_[v].clear();
        alive_v_[v] = false;
        pos_[u] = e.target;
        quad_[u] = quad_[u] + quad_[v];

        const auto nb = ring(u);
        ++stamp_[u];
        for (std::uint32_t w : nb) ++stamp_[w];
        std::set<std::uint64_t> seen;
        for (std::uint32_t w : nb) {
            for (std::uint32_t x : ring(w))
                if (seen.insert(key(w, x)).second) push(w, x);
        }
    }

    std::vector<Vec3> pos_;
    std::vector<Face> faces_;
    std::vector<bool> alive_v_, alive_f_;
    std::vector<std::uint64_t> stamp_;
    std::vector<Quadric> quad_;
    std::vector<std::vector<std::uint32_t>> inc_;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap_;
    std::size_t live_faces_ = 0;
    double eps_ = 0;
};

}  // namespace

SimplifyResult simplify_mesh(const TriMesh& mesh, std::size_t target_faces) {
    if (target_faces < 4) throw Error(ErrorCode::invalid_target, "target_faces must be at least 4");
    mesh.validate();
    if (target_faces >= mesh.faces.size()) return {mesh, true};
    Simplifier s(mesh);
    const bool reached = s.run(target_faces);
    return {s.result(), reached};
}

}  // namespace scirender
