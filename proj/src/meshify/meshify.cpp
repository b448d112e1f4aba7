#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scirender/bvh.hpp"
#include "scirender/error.hpp"
#include "scirender/knn.hpp"
#include "scirender/meshify.hpp"
#include "scirender/pc_utils.hpp"

namespace scirender {

// -------------------------------------------------------------------- atlas

namespace {

std::size_t cells_needed(std::size_t face_count) { return (face_count + 1) / 2; }

int grid_side(std::size_t face_count) {
    const std::size_t cells = cells_needed(face_count);
    auto n = static_cast<std::size_t>(std::sqrt(static_cast<double>(cells)));
    while (n * n < cells) ++n;
    while (n > 1 && (n - 1) * (n - 1) >= cells) --n;
    return static_cast<int>(std::max<std::size_t>(n, 1));
}

int margin_for(int gap_px) { return (gap_px + 1) / 2 + 1; }
int diagonal_for(int gap_px) { return gap_px + 2; }
int min_cell(int gap_px) { return 2 * margin_for(gap_px) + diagonal_for(gap_px) + 1; }

}  // namespace

int minimal_atlas_resolution(std::size_t face_count, int gap_px) {
    if (gap_px < 1) throw Error(ErrorCode::invalid_argument, "gap_px must be >= 1");
    return grid_side(face_count) * min_cell(gap_px);
}

AtlasLayout atlas_layout(std::size_t face_count, int resolution, int gap_px) {
    if (gap_px < 1) throw Error(ErrorCode::invalid_argument, "gap_px must be >= 1");
    if (resolution < 1) throw Error(ErrorCode::invalid_argument, "texture resolution must be >= 1");
    if (face_count == 0) throw Error(ErrorCode::invalid_geometry, "atlas needs at least one face");
    AtlasLayout l;
    l.cells_per_side = grid_side(face_count);
    l.cell_px = resolution / l.cells_per_side;
    if (l.cell_px < min_cell(gap_px))
        throw Error(ErrorCode::atlas_capacity,
                    std::to_string(face_count) + " faces need a texture resolution of at least " +
                        std::to_string(minimal_atlas_resolution(face_count, gap_px)) + " (got " +
                        std::to_string(resolution) + ")");
    l.margin_px = margin_for(gap_px);
    l.diagonal_px = diagonal_for(gap_px);
    return l;
}

FacesUV build_face_atlas(const TriMesh& mesh, int resolution, int gap_px) {
    const AtlasLayout l = atlas_layout(mesh.faces.size(), resolution, gap_px);
    const double c = l.cell_px, m = l.margin_px;
    const double leg = c - l.diagonal_px - 2 * m;  // legs of the right-triangle region
    const double R = resolution;
    FacesUV out;
    out.uv.resize(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& fc = mesh.faces[f];
        const Vec3 p[3] = {mesh.vertices[fc[0]], mesh.vertices[fc[1]], mesh.vertices[fc[2]]};
        // Longest edge i -> j becomes the base, k the apex.
        int i = 0;
        double best = -1;
        for (int s = 0; s < 3; ++s) {
            const double len = length_squared(p[(s + 1) % 3] - p[s]);
            if (len > best) {
                best = len;
                i = s;
            }
        }
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        double px = 0, py = 1;
        const double base = std::sqrt(best);
        if (base > 0) {
            const Vec3 e = (p[j] - p[i]) / base;
            px = dot(p[k] - p[i], e) / base;
            py = length(cross(p[k] - p[i], e)) / base;
        }
        px = std::clamp(px, 0.0, 1.0);
        py = std::max(py, 0.2);
        const bool mirror = px > 0.5;
        const double q = mirror ? 1 - px : px;
        const double s = leg / std::max(1.0, q + py);
        // Local coordinates in the lower-left region; x right, y up.
        Vec2 local[3];
        local[i] = {mirror ? s : 0.0, 0.0};
        local[j] = {mirror ? 0.0 : s, 0.0};
        local[k] = {s * q, s * py};
        const std::size_t cell = f / 2;
        const bool upper = f % 2 == 1;
        const double ox = static_cast<double>(cell % l.cells_per_side) * c;
        const double oy = static_cast<double>(cell / l.cells_per_side) * c;  // from the top
        for (int t = 0; t < 3; ++t) {
            const double lx = upper ? c - m - local[t].x : m + local[t].x;
            const double ly = upper ? c - m - local[t].y : m + local[t].y;
            // Pixel rows grow downward; local y grows upward from the cell bottom.
            const double x = ox + lx;
            const double y = oy + (c - ly);
            out.uv[f][t] = {x / R, 1.0 - y / R};
        }
    }
    return out;
}

// --------------------------------------------------------------- projection

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, Vec3& bary) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) {
        bary = {1, 0, 0};
        return a;
    }
    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) {
        bary = {0, 1, 0};
        return b;
    }
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        const double v = d1 / (d1 - d3);
        bary = {1 - v, v, 0};
        return a + ab * v;
    }
    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) {
        bary = {0, 0, 1};
        return c;
    }
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        const double w = d2 / (d2 - d6);
        bary = {1 - w, 0, w};
        return a + ac * w;
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        bary = {0, 1 - w, w};
        return b + (c - b) * w;
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    bary = {1 - v - w, v, w};
    return a + ab * v + ac * w;
}

std::vector<PointProjection> project_points_to_mesh(const std::vector<Vec3>& points, const TriMesh& mesh) {
    if (mesh.faces.empty()) throw Error(ErrorCode::invalid_geometry, "cannot project onto an empty mesh");
    std::vector<Aabb> boxes(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        for (std::uint32_t v : mesh.faces[f]) boxes[f].expand(mesh.vertices[v]);
    Bvh bvh;
    bvh.build(boxes, 4);
    const auto& nodes = bvh.nodes();
    const auto& order = bvh.order();
    std::vector<PointProjection> out(points.size());
    std::vector<std::uint32_t> stack;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3& p = points[i];
        double best = std::numeric_limits<double>::infinity();
        PointProjection pr;
        stack.assign(1, 0);
        while (!stack.empty()) {
            const BvhNode& n = nodes[stack.back()];
            stack.pop_back();
            if (n.box.distance2(p) > best) continue;
            if (n.leaf()) {
                for (std::uint32_t s = n.first; s < n.first + n.count; ++s) {
                    const std::uint32_t f = order[s];
                    const Face& fc = mesh.faces[f];
                    Vec3 bary;
                    const Vec3 q = closest_point_on_triangle(p, mesh.vertices[fc[0]], mesh.vertices[fc[1]],
                                                             mesh.vertices[fc[2]], bary);
                    const double d2 = length_squared(q - p);
                    if (d2 < best || (d2 == best && f < pr.face)) {
                        best = d2;
                        pr = {f, bary, q, 0};
                    }
                }
                continue;
            }
            const std::uint32_t l = n.first, r = n.first + 1;
            const double dl = nodes[l].box.distance2(p), dr = nodes[r].box.distance2(p);
            if (dl <= dr) {
                stack.push_back(r);
                stack.push_back(l);
            } else {
                stack.push_back(l);
                stack.push_back(r);
            }
        }
        pr.distance = std::sqrt(best);
        out[i] = pr;
    }
    return out;
}

// --------------------------------------------------------------------- bake

namespace {

struct Coverage {
    std::vector<std::int32_t> owner;  // face per texel, -1 outside
    std::vector<Vec3> bary;
    std::size_t covered = 0;
};

Coverage rasterize_atlas(const FacesUV& uv, int R) {
    Coverage cov;
    const std::size_t n = static_cast<std::size_t>(R) * R;
    cov.owner.assign(n, -1);
    cov.bary.assign(n, {});
    for (std::size_t f = 0; f < uv.uv.size(); ++f) {
        double xs[3], ys[3];
        for (int k = 0; k < 3; ++k) {
            xs[k] = uv.uv[f][k].x * R;
            ys[k] = (1.0 - uv.uv[f][k].y) * R;
        }
        const double area = (xs[1] - xs[0]) * (ys[2] - ys[0]) - (xs[2] - xs[0]) * (ys[1] - ys[0]);
        if (area == 0) continue;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({xs[0], xs[1], xs[2]}))));
        const int x1 = std::min(R - 1, static_cast<int>(std::ceil(std::max({xs[0], xs[1], xs[2]}))));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({ys[0], ys[1], ys[2]}))));
        const int y1 = std::min(R - 1, static_cast<int>(std::ceil(std::max({ys[0], ys[1], ys[2]}))));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double cx = x + 0.5, cy = y + 0.5;
                double w[3];
                for (int k = 0; k < 3; ++k) {
                    const int a = (k + 1) % 3, b = (k + 2) % 3;
                    w[k] = ((xs[b] - xs[a]) * (cy - ys[a]) - (cx - xs[a]) * (ys[b] - ys[a])) / area;
                }
                if (w[0] < 0 || w[1] < 0 || w[2] < 0) continue;
                const std::size_t idx = static_cast<std::size_t>(y) * R + x;
                if (cov.owner[idx] >= 0) continue;
                cov.owner[idx] = static_cast<std::int32_t>(f);
                const double sum = w[0] + w[1] + w[2];
                cov.bary[idx] = {w[0] / sum, w[1] / sum, w[2] / sum};
                ++cov.covered;
            }
    }
    return cov;
}

void dilate(Image& img, std::vector<bool>& filled) {
    const int W = img.width, H = img.height;
    auto idx = [W](int x, int y) { return static_cast<std::size_t>(y) * W + x; };
    std::vector<bool> queued(filled.size(), false);
    std::vector<std::pair<int, int>> layer;
    auto enqueue_neighbors = [&](int x, int y, std::vector<std::pair<int, int>>& into) {
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
                const std::size_t i = idx(nx, ny);
                if (filled[i] || queued[i]) continue;
                queued[i] = true;
                into.emplace_back(nx, ny);
            }
    };
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (filled[idx(x, y)]) enqueue_neighbors(x, y, layer);
    while (!layer.empty()) {
        std::sort(layer.begin(), layer.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second < b.second : a.first < b.first;
        });
        std::vector<Vec4> colors(layer.size());
        for (std::size_t n = 0; n < layer.size(); ++n) {
            const auto [x, y] = layer[n];
            Vec4 sum;
            int cnt = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= W || ny >= H || !filled[idx(nx, ny)]) continue;
                    sum = sum + img.at(nx, ny);
                    ++cnt;
                }
            colors[n] = sum * (1.0 / cnt);
        }
        for (std::size_t n = 0; n < layer.size(); ++n) {
            img.set(layer[n].first, layer[n].second, colors[n]);
            filled[idx(layer[n].first, layer[n].second)] = true;
        }
        std::vector<std::pair<int, int>> next;
        for (const auto& [x, y] : layer) enqueue_neighbors(x, y, next);
        layer = std::move(next);
    }
}

}  // namespace

Image bake_texture(const TriMesh& mesh, const FacesUV& uv, const std::vector<Vec4>& point_colors,
                   const std::vector<PointProjection>& projections, int k, int resolution) {
    if (projections.empty()) throw Error(ErrorCode::empty_bake, "no projected points to bake from");
    if (point_colors.size() != projections.size())
        throw Error(ErrorCode::bind_error, "bake needs one color per projected point");
    if (uv.uv.size() != mesh.faces.size()) throw Error(ErrorCode::bind_error, "faces_uv must have one entry per face");
    if (k < 1) throw Error(ErrorCode::invalid_argument, "bake_k must be >= 1");
    if (resolution < 1) throw Error(ErrorCode::invalid_argument, "texture resolution must be >= 1");
    std::vector<Vec3> feet(projections.size());
    for (std::size_t i = 0; i < feet.size(); ++i) feet[i] = projections[i].foot;
    const KdTree tree(std::move(feet));
    const Coverage cov = rasterize_atlas(uv, resolution);
    Image img(resolution, resolution, {0, 0, 0, 1});
    std::vector<bool> filled(cov.owner.size(), false);
    for (int y = 0; y < resolution; ++y)
        for (int x = 0; x < resolution; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * resolution + x;
            if (cov.owner[idx] < 0) continue;
            const Face& fc = mesh.faces[static_cast<std::size_t>(cov.owner[idx])];
            const Vec3& b = cov.bary[idx];
            const Vec3 q = mesh.vertices[fc[0]] * b.x + mesh.vertices[fc[1]] * b.y + mesh.vertices[fc[2]] * b.z;
            Vec4 sum;
            double wsum = 0;
            for (const Neighbor& nb : tree.knn(q, static_cast<std::size_t>(k))) {
                const double w = 1.0 / (std::sqrt(nb.dist2) + 1e-6);
                sum = sum + point_colors[nb.index] * w;
                wsum += w;
            }
            img.set(x, y, sum * (1.0 / wsum));
            filled[idx] = true;
        }
    dilate(img, filled);
    return img;
}

// ----------------------------------------------------------------- pipeline

void validate_meshify_config(const MeshifyConfig& c) {
    for (std::size_t i = 0; i < c.bpa_radii.size(); ++i) {
        if (!(c.bpa_radii[i] > 0) || !std::isfinite(c.bpa_radii[i]))
            throw Error(ErrorCode::invalid_argument, "bpa radii must be positive");
        if (i > 0 && !(c.bpa_radii[i] > c.bpa_radii[i - 1]))
            throw Error(ErrorCode::invalid_argument, "bpa radii must be strictly ascending");
    }
    if (c.target_faces < 4) throw Error(ErrorCode::invalid_target, "target_faces must be at least 4");
    if (c.texture_resolution < 1) throw Error(ErrorCode::invalid_argument, "texture_resolution must be >= 1");
    if (c.gap_px < 1) throw Error(ErrorCode::invalid_argument, "gap_px must be >= 1");
    if (c.bake_k < 1) throw Error(ErrorCode::invalid_argument, "bake_k must be >= 1");
    if (c.normal_k < 3) throw Error(ErrorCode::invalid_argument, "normal_k must be >= 3");
}

namespace {

template <class F>
auto run_stage(const char* name, MeshifyLog& log, F&& f) -> decltype(f()) {
    log.stages.emplace_back(name);
    try {
        return f();
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw Error(e.code(), e.what(), name);
    }
}

}  // namespace

MeshifyResult meshify_pc(const std::vector<Vec3>& points, const std::vector<Vec4>& colors,
                         const std::optional<std::vector<Vec3>>& normals, const MeshifyConfig& config) {
    MeshifyResult res;
    MeshifyLog& log = res.log;
    try {
        validate_meshify_config(config);
        if (points.size() < 4)
            throw Error(ErrorCode::insufficient_points, "meshify needs at least 4 points, got " +
                                                            std::to_string(points.size()));
        for (const Vec3& p : points)
            if (!is_finite(p)) throw Error(ErrorCode::invalid_argument, "points must be finite");
        if (normals && normals->size() != points.size())
            throw Error(ErrorCode::bind_error, "normals must have one entry per point");
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), "input");
    }
    if (colors.empty()) throw Error(ErrorCode::bind_error, "bake requires colors", "bake");
    if (colors.size() != 1 && colors.size() != points.size())
        throw Error(ErrorCode::bind_error, "colors must have 1 or N entries", "bake");

    std::vector<Vec3> nrm;
    if (normals) {
        nrm = *normals;
    } else {
        nrm = run_stage("normals", log, [&] {
            Vec3 centroid;
            for (const Vec3& p : points) centroid = centroid + p;
            centroid = centroid / static_cast<double>(points.size());
            const int k = static_cast<int>(std::min<std::size_t>(config.normal_k, points.size()));
            auto est = estimate_normals_from_pointcloud(points, k, centroid);
            // Oriented toward the centroid; flip to face outward.
            for (Vec3& n : est.normals) n = -n;
            return est.normals;
        });
        log.normals_estimated = true;
    }

    log.radii = config.bpa_radii.empty()
                    ? run_stage("radii", log, [&] { return default_bpa_radii(points); })
                    : config.bpa_radii;

    TriMesh mesh = run_stage("ball_pivot", log, [&] { return ball_pivot(points, nrm, log.radii); });
    log.faces_reconstructed = mesh.faces.size();

    SimplifyResult simp = run_stage("simplify", log, [&] { return simplify_mesh(mesh, config.target_faces); });
    log.simplify_reached_target = simp.reached_target;
    // Drop points that no face references.
    TriMesh compact;
    {
        std::vector<std::uint32_t> remap(simp.mesh.vertices.size(), UINT32_MAX);
        for (const Face& f : simp.mesh.faces) {
            Face nf;
            for (int k = 0; k < 3; ++k) {
                std::uint32_t& r = remap[f[k]];
                if (r == UINT32_MAX) {
                    r = static_cast<std::uint32_t>(compact.vertices.size());
                    compact.vertices.push_back(simp.mesh.vertices[f[k]]);
                }
                nf[k] = r;
            }
            compact.faces.push_back(nf);
        }
    }
    log.faces_simplified = compact.faces.size();

    FacesUV uv = run_stage("atlas", log, [&] {
        return build_face_atlas(compact, config.texture_resolution, config.gap_px);
    });
    auto proj = run_stage("project", log, [&] { return project_points_to_mesh(points, compact); });
    Image tex = run_stage("bake", log, [&] {
        std::vector<Vec4> pc(points.size());
        for (std::size_t i = 0; i < pc.size(); ++i) pc[i] = colors.size() == 1 ? colors[0] : colors[i];
        return bake_texture(compact, uv, pc, proj, config.bake_k, config.texture_resolution);
    });
    const Coverage cov = rasterize_atlas(uv, config.texture_resolution);
    log.atlas_occupancy =
        static_cast<double>(cov.covered) / (static_cast<double>(config.texture_resolution) * config.texture_resolution);

    res.textured = {std::move(compact), std::move(uv), std::move(tex)};
    return res;
}

}  // namespace scirender
