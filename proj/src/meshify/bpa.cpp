#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>

#include "scirender/error.hpp"
#include "scirender/knn.hpp"
#include "scirender/meshify.hpp"

namespace scirender {

double mean_nearest_spacing(const std::vector<Vec3>& points) {
    if (points.size() < 2) throw Error(ErrorCode::insufficient_points, "spacing needs at least 2 points");
    const KdTree tree(points);
    double sum = 0;
    for (const Vec3& p : points) sum += std::sqrt(tree.knn(p, 2)[1].dist2);
    return sum / static_cast<double>(points.size());
}

std::vector<double> default_bpa_radii(const std::vector<Vec3>& points) {
    const double s = mean_nearest_spacing(points);
    if (!(s > 0)) throw Error(ErrorCode::empty_reconstruction, "all points coincide");
    return {s, 1.5 * s, 2.0 * s};
}

namespace {

// Center of the radius-rho ball through p0, p1, p2 on the side of cross(p1 - p0, p2 - p0).
std::optional<Vec3> ball_center(const Vec3& p0, const Vec3& p1, const Vec3& p2, double rho) {
    const Vec3 a = p1 - p0, b = p2 - p0;
    const Vec3 n = cross(a, b);
    const double n2 = length_squared(n);
    const double a2 = length_squared(a), b2 = length_squared(b);
    if (!(n2 > 1e-20 * a2 * b2)) return std::nullopt;
    const Vec3 cc = p0 + (cross(n, a) * b2 + cross(b, n) * a2) / (2.0 * n2);
    const double h2 = rho * rho - length_squared(cc - p0);
    if (h2 < 0) return std::nullopt;
    return cc + n * (std::sqrt(h2) / std::sqrt(n2));
}

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
    return a < b ? (std::uint64_t{a} << 32 | b) : (std::uint64_t{b} << 32 | a);
}

class Pivoter {
public:
    Pivoter(const std::vector<Vec3>& points, const std::vector<Vec3>& normals)
        : p_(points), n_(normals), tree_(points), vertex_faces_(points.size(), 0), open_edges_(points.size(), 0) {}

    void run(double rho, bool first) {
        rho_ = rho;
        if (!first) reopen_boundary();
        expand();
        for (std::uint32_t i = 0; i < p_.size(); ++i) {
            if (vertex_faces_[i] != 0) continue;
            if (seed(i)) expand();
        }
    }

    std::vector<Face> faces() const { return faces_; }

private:
    struct Edge {
        std::uint32_t from = 0, to = 0, opposite = 0;  // direction as wound in its first face
        Vec3 center;
        int faces = 0;
        bool boundary = false;
    };

    bool empty_ball(const Vec3& c, std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
        const double lim = rho_ * (1.0 - 1e-9);
        for (const Neighbor& nb : tree_.radius(c, rho_)) {
            if (nb.index == i || nb.index == j || nb.index == k) continue;
            if (nb.dist2 < lim * lim) return false;
        }
        return true;
    }

    bool normals_agree(const Vec3& fn, std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
        return dot(fn, n_[i]) > 0 && dot(fn, n_[j]) > 0 && dot(fn, n_[k]) > 0;
    }

    bool inner(std::uint32_t v) const { return vertex_faces_[v] > 0 && open_edges_[v] == 0; }

    // Directed edge from -> to can join a new face.
    bool edge_free(std::uint32_t from, std::uint32_t to) const {
        const auto it = edges_.find(edge_key(from, to));
        if (it == edges_.end()) return true;
        const Edge& e = it->second;
        return e.faces == 1 && e.from == to && e.to == from;
    }

    void add_face(std::uint32_t a, std::uint32_t b, std::uint32_t c, const Vec3& center) {
        faces_.push_back({a, b, c});
        const std::uint32_t v[3] = {a, b, c};
        for (int s = 0; s < 3; ++s) {
            const std::uint32_t from = v[s], to = v[(s + 1) % 3], opp = v[(s + 2) % 3];
            Edge& e = edges_[edge_key(from, to)];
            if (e.faces == 0) {
                e = {from, to, opp, center, 1, false};
                ++open_edges_[from];
                ++open_edges_[to];
                front_.push_back(edge_key(from, to));
            } else {
                e.faces = 2;
                --open_edges_[from];
                --open_edges_[to];
            }
            ++vertex_faces_[v[s]];
        }
    }

    bool seed(std::uint32_t i) {
        std::vector<Neighbor> nb = tree_.radius(p_[i], 2 * rho_);
        std::sort(nb.begin(), nb.end(), [](const Neighbor& x, const Neighbor& y) {
            return x.dist2 != y.dist2 ? x.dist2 < y.dist2 : x.index < y.index;
        });
        std::vector<std::uint32_t> cand;
        for (const Neighbor& n : nb)
            if (n.index != i && vertex_faces_[n.index] == 0) cand.push_back(n.index);
        for (std::size_t s = 0; s < cand.size(); ++s) {
            for (std::size_t t = s + 1; t < cand.size(); ++t) {
                std::uint32_t j = cand[s], k = cand[t];
                if (length_squared(p_[j] - p_[k]) > 4 * rho_ * rho_) continue;
                Vec3 fn = cross(p_[j] - p_[i], p_[k] - p_[i]);
                if (dot(fn, n_[i] + n_[j] + n_[k]) < 0) {
                    std::swap(j, k);
                    fn = -fn;
                }
                if (!normals_agree(fn, i, j, k)) continue;
                const auto c = ball_center(p_[i], p_[j], p_[k], rho_);
                if (!c || !empty_ball(*c, i, j, k)) continue;
                add_face(i, j, k, *c);
                return true;
            }
        }
        return false;
    }

    struct Candidate {
        double angle;
        std::uint32_t index;
        Vec3 center;
    };

    std::optional<Candidate> pivot(const Edge& e) const {
        const std::uint32_t a = e.from, b = e.to;
        const Vec3 m = (p_[a] + p_[b]) * 0.5;
        const Vec3 axis = normalize(p_[b] - p_[a]);
        const Vec3 v0 = e.center - m;
        std::vector<Candidate> cands;
        for (const Neighbor& nb : tree_.radius(m, 2 * rho_)) {
            const std::uint32_t x = nb.index;
            if (x == a || x == b || x == e.opposite || inner(x)) continue;
            const Vec3 fn = cross(p_[a] - p_[b], p_[x] - p_[b]);
            if (!normals_agree(fn, a, b, x)) continue;
            const auto c = ball_center(p_[b], p_[a], p_[x], rho_);
            if (!c) continue;
            if (!edge_free(a, x) || !edge_free(x, b)) continue;
            const Vec3 v1 = *c - m;
            const double cosang = dot(v0, v1) / std::sqrt(length_squared(v0) * length_squared(v1));
            double ang = std::atan2(dot(cross(v0, v1), axis), dot(v0, v1));
            if (cosang > 1.0 - 1e-12) ang = 0;
            else if (ang < 0) ang += 2 * kPi;
            cands.push_back({ang, x, *c});
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
            return x.angle != y.angle ? x.angle < y.angle : x.index < y.index;
        });
        for (const Candidate& c : cands)
            if (empty_ball(c.center, a, b, c.index)) return c;
        return std::nullopt;
    }

    void expand() {
        while (!front_.empty()) {
            const std::uint64_t key = front_.front();
            front_.pop_front();
            Edge& e = edges_[key];
            if (e.faces != 1 || e.boundary) continue;
            const auto c = pivot(e);
            if (!c) {
                e.boundary = true;
                continue;
            }
            add_face(e.to, e.from, c->index, c->center);
        }
    }

    // A larger ball may seat on edges left open by the previous radius.
    void reopen_boundary() {
        for (auto& [key, e] : edges_) {
            if (e.faces != 1) continue;
            const auto c = ball_center(p_[e.from], p_[e.to], p_[e.opposite], rho_);
            if (!c || !empty_ball(*c, e.from, e.to, e.opposite)) continue;
            e.center = *c;
            e.boundary = false;
            front_.push_back(key);
        }
    }

    const std::vector<Vec3>& p_;
    const std::vector<Vec3>& n_;
    KdTree tree_;
    double rho_ = 0;
    std::vector<Face> faces_;
    std::map<std::uint64_t, Edge> edges_;
    std::deque<std::uint64_t> front_;
    std::vector<int> vertex_faces_;
    std::vector<int> open_edges_;
};

}  // namespace

TriMesh ball_pivot(const std::vector<Vec3>& points, const std::vector<Vec3>& normals,
                   const std::vector<double>& radii) {
    if (normals.size() != points.size())
        throw Error(ErrorCode::invalid_argument, "ball pivoting needs one normal per point");
    if (radii.empty()) throw Error(ErrorCode::invalid_argument, "at least one radius is required");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0) || !std::isfinite(radii[i]))
            throw Error(ErrorCode::invalid_argument, "radii must be positive");
        if (i > 0 && !(radii[i] > radii[i - 1]))
            throw Error(ErrorCode::invalid_argument, "radii must be strictly ascending");
    }
    std::vector<Vec3> unit(normals.size());
    for (std::size_t i = 0; i < normals.size(); ++i) {
        const double len = length(normals[i]);
        if (!(len > 0) || !std::isfinite(len) || !is_finite(points[i]))
            throw Error(ErrorCode::invalid_argument, "points and normals must be finite and nonzero");
        unit[i] = normals[i] / len;
    }
    TriMesh mesh;
    mesh.vertices = points;
    if (points.size() >= 3) {
        Pivoter pv(points, unit);
        for (std::size_t i = 0; i < radii.size(); ++i) pv.run(radii[i], i == 0);
        mesh.faces = pv.faces();
    }
    if (mesh.faces.empty())
        throw Error(ErrorCode::empty_reconstruction, "no ball of the given radii seats on three points");
    return mesh;
}

}  // namespace scirender
