#include "scirender/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scirender {

double Aabb::distance2(const Vec3& p) const {
    double d2 = 0;
    for (int k = 0; k < 3; ++k) {
        const double v = p[k];
        if (v < lo[k]) d2 += (lo[k] - v) * (lo[k] - v);
        else if (v > hi[k]) d2 += (v - hi[k]) * (v - hi[k]);
    }
    return d2;
}

bool Aabb::intersect(const Vec3& origin, const Vec3& inv_dir, double t_max, double& t_near) const {
    double t0 = 0.0, t1 = t_max;
    for (int k = 0; k < 3; ++k) {
        double a = (lo[k] - origin[k]) * inv_dir[k];
        double b = (hi[k] - origin[k]) * inv_dir[k];
        if (a > b) std::swap(a, b);
        // Widen the far bound so rounding never culls a grazing hit.
        b *= 1.0 + 4.0 * std::numeric_limits<double>::epsilon();
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
        if (t0 > t1) return false;
    }
    t_near = t0;
    return true;
}

namespace {

struct Builder {
    std::span<const Aabb> boxes;
    std::vector<Vec3> centers;
    std::vector<std::uint32_t>& order;
    std::vector<BvhNode>& nodes;
    std::uint32_t leaf_size;

    void split(std::uint32_t node, std::uint32_t first, std::uint32_t count) {
        Aabb box, cbox;
        for (std::uint32_t i = first; i < first + count; ++i) {
            box.expand(boxes[order[i]]);
            cbox.expand(centers[order[i]]);
        }
        nodes[node].box = box;
        const Vec3 ext = cbox.hi - cbox.lo;
        if (count <= leaf_size) {
            nodes[node].first = first;
            nodes[node].count = count;
            return;
        }
        int axis = 0;
        if (ext.y > ext[axis]) axis = 1;
        if (ext.z > ext[axis]) axis = 2;
        const std::uint32_t mid = count / 2;
        auto begin = order.begin() + first;
        std::nth_element(begin, begin + mid, begin + count, [&](std::uint32_t a, std::uint32_t b) {
            const double ca = centers[a][axis], cb = centers[b][axis];
            return ca < cb || (ca == cb && a < b);
        });
        const auto left = static_cast<std::uint32_t>(nodes.size());
        nodes.emplace_back();
        nodes.emplace_back();
        nodes[node].first = left;
        nodes[node].count = 0;
        split(left, first, mid);
        split(left + 1, first + mid, count - mid);
    }
};

}  // namespace

void Bvh::build(std::span<const Aabb> boxes, std::uint32_t leaf_size) {
    nodes_.clear();
    order_.resize(boxes.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (boxes.empty()) return;
    Builder b{boxes, {}, order_, nodes_, std::max<std::uint32_t>(1, leaf_size)};
    b.centers.reserve(boxes.size());
    for (const Aabb& box : boxes) b.centers.push_back(box.center());
    nodes_.reserve(2 * boxes.size());
    nodes_.emplace_back();
    b.split(0, 0, static_cast<std::uint32_t>(boxes.size()));
}

namespace {

Vec3 inverse(const Vec3& d) { return {1.0 / d.x, 1.0 / d.y, 1.0 / d.z}; }

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

// Visits leaves front to back, calling leaf(node) which returns the new t_max
// (or a negative value to stop early).
template <class Leaf>
void traverse(const std::vector<BvhNode>& nodes, const Vec3& origin, const Vec3& direction, double t_max,
              Leaf&& leaf) {
    if (nodes.empty()) return;
    const Vec3 inv = inverse(direction);
    std::uint32_t stack[128];
    int sp = 0;
    stack[sp++] = 0;
    double tn;
    while (sp > 0) {
        const BvhNode& n = nodes[stack[--sp]];
        if (!n.box.intersect(origin, inv, t_max, tn)) continue;
        if (n.leaf()) {
            t_max = leaf(n);
            if (t_max < 0) return;
            continue;
        }
        double ta, tb;
        const bool ha = nodes[n.first].box.intersect(origin, inv, t_max, ta);
        const bool hb = nodes[n.first + 1].box.intersect(origin, inv, t_max, tb);
        if (ha && hb) {
            // Push the farther child first.
            if (ta <= tb) {
                stack[sp++] = n.first + 1;
                stack[sp++] = n.first;
            } else {
                stack[sp++] = n.first;
                stack[sp++] = n.first + 1;
            }
        } else if (ha) {
            stack[sp++] = n.first;
        } else if (hb) {
            stack[sp++] = n.first + 1;
        }
    }
}

}  // namespace

void TriangleAccel::build(std::vector<std::array<Vec3, 3>> triangles) {
    triangles_ = std::move(triangles);
    std::vector<Aabb> boxes(triangles_.size());
    for (std::size_t i = 0; i < triangles_.size(); ++i)
        for (const Vec3& v : triangles_[i]) boxes[i].expand(v);
    bvh_.build(boxes, simd::kLanes);
    blocks_.clear();
    lane_item_.clear();
    block_of_node_.assign(bvh_.nodes().size(), kNone);
    for (std::size_t ni = 0; ni < bvh_.nodes().size(); ++ni) {
        const BvhNode& n = bvh_.nodes()[ni];
        if (!n.leaf()) continue;
        block_of_node_[ni] = static_cast<std::uint32_t>(blocks_.size());
        simd::TriangleBlock blk;
        for (std::uint32_t lane = 0; lane < simd::kLanes; ++lane) {
            if (lane < n.count) {
                const std::uint32_t tri = bvh_.order()[n.first + lane];
                for (int c = 0; c < 3; ++c)
                    for (int k = 0; k < 3; ++k) blk.v[c][k][lane] = triangles_[tri][c][k];
                lane_item_.push_back(tri);
            } else {
                lane_item_.push_back(kNone);
            }
        }
        blocks_.push_back(blk);
    }
}

bool TriangleAccel::intersect(const Vec3& origin, const Vec3& direction, double t_max,
                              simd::TriangleHit& hit) const {
    const simd::WatertightRay ray(origin, direction);
    bool found = false;
    traverse(bvh_.nodes(), origin, direction, t_max, [&](const BvhNode& n) {
        const std::uint32_t b = block_of_node_[&n - bvh_.nodes().data()];
        simd::TriangleHit h;
        if (simd::intersect_triangles(ray, std::span(&blocks_[b], 1), t_max, h)) {
            t_max = h.t;
            hit = h;
            hit.index = lane_item_[b * simd::kLanes + h.index];
            found = true;
        }
        return t_max;
    });
    return found;
}

bool TriangleAccel::occluded(const Vec3& origin, const Vec3& direction, double t_max) const {
    const simd::WatertightRay ray(origin, direction);
    bool found = false;
    traverse(bvh_.nodes(), origin, direction, t_max, [&](const BvhNode& n) {
        const std::uint32_t b = block_of_node_[&n - bvh_.nodes().data()];
        simd::TriangleHit h;
        if (simd::intersect_triangles(ray, std::span(&blocks_[b], 1), t_max, h)) {
            found = true;
            return -1.0;
        }
        return t_max;
    });
    return found;
}

void SphereAccel::build(std::vector<Vec3> centers, std::vector<double> radii) {
    centers_ = std::move(centers);
    radii_ = std::move(radii);
    std::vector<Aabb> boxes(centers_.size());
    for (std::size_t i = 0; i < centers_.size(); ++i) {
        const Vec3 r{radii_[i], radii_[i], radii_[i]};
        boxes[i].expand(centers_[i] - r);
        boxes[i].expand(centers_[i] + r);
    }
    bvh_.build(boxes, simd::kLanes);
    blocks_.clear();
    lane_item_.clear();
    block_of_node_.assign(bvh_.nodes().size(), kNone);
    for (std::size_t ni = 0; ni < bvh_.nodes().size(); ++ni) {
        const BvhNode& n = bvh_.nodes()[ni];
        if (!n.leaf()) continue;
        block_of_node_[ni] = static_cast<std::uint32_t>(blocks_.size());
        simd::SphereBlock blk;
        for (std::uint32_t lane = 0; lane < simd::kLanes; ++lane) {
            if (lane < n.count) {
                const std::uint32_t s = bvh_.order()[n.first + lane];
                blk.cx[lane] = centers_[s].x;
                blk.cy[lane] = centers_[s].y;
                blk.cz[lane] = centers_[s].z;
                blk.radius[lane] = radii_[s];
                lane_item_.push_back(s);
            } else {
                lane_item_.push_back(kNone);
            }
        }
        blocks_.push_back(blk);
    }
}

bool SphereAccel::intersect(const Vec3& origin, const Vec3& direction, double t_min, double t_max,
                            simd::SphereHit& hit) const {
    bool found = false;
    traverse(bvh_.nodes(), origin, direction, t_max, [&](const BvhNode& n) {
        const std::uint32_t b = block_of_node_[&n - bvh_.nodes().data()];
        simd::SphereHit h;
        if (simd::intersect_spheres(origin, direction, std::span(&blocks_[b], 1), t_min, t_max, h)) {
            t_max = h.t;
            hit = h;
            hit.index = lane_item_[b * simd::kLanes + h.index];
            found = true;
        }
        return t_max;
    });
    return found;
}

bool SphereAccel::occluded(const Vec3& origin, const Vec3& direction, double t_min, double t_max) const {
    bool found = false;
    traverse(bvh_.nodes(), origin, direction, t_max, [&](const BvhNode& n) {
        const std::uint32_t b = block_of_node_[&n - bvh_.nodes().data()];
        simd::SphereHit h;
        if (simd::intersect_spheres(origin, direction, std::span(&blocks_[b], 1), t_min, t_max, h)) {
            found = true;
            return -1.0;
        }
        return t_max;
    });
    return found;
}

}  // namespace scirender
