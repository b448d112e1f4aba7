#pragma once

// Bounding volume hierarchies over triangles and spheres.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "scirender/math.hpp"
#include "scirender/simd.hpp"

namespace scirender {

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void expand(const Vec3& p) {
        lo = min(lo, p);
        hi = max(hi, p);
    }
    void expand(const Aabb& b) {
        lo = min(lo, b.lo);
        hi = max(hi, b.hi);
    }
    Vec3 center() const { return (lo + hi) * 0.5; }
    bool valid() const { return lo.x <= hi.x; }

    /// Squared distance from p to the box (0 inside).
    double distance2(const Vec3& p) const;

    /// Slab test; `inv_dir` is 1 / direction componentwise.
    bool intersect(const Vec3& origin, const Vec3& inv_dir, double t_max, double& t_near) const;
};

struct BvhNode {
    Aabb box;
    std::uint32_t first = 0;  // leaf: index into order(); interior: left child (right = first + 1)
    std::uint32_t count = 0;  // leaf item count; 0 for interior nodes
    bool leaf() const { return count > 0; }
};

/// Median-split hierarchy over boxes. Node 0 is the root when non-empty.
class Bvh {
public:
    void build(std::span<const Aabb> boxes, std::uint32_t leaf_size = 4);

    const std::vector<BvhNode>& nodes() const { return nodes_; }
    const std::vector<std::uint32_t>& order() const { return order_; }
    bool empty() const { return nodes_.empty(); }

private:
    std::vector<BvhNode> nodes_;
    std::vector<std::uint32_t> order_;
};

/// Closest-hit and any-hit queries over a triangle soup, four triangles per
/// leaf tested with the SIMD watertight kernel.
class TriangleAccel {
public:
    void build(std::vector<std::array<Vec3, 3>> triangles);

    /// Closest hit with 0 < t < t_max; hit.index is the triangle's input index.
    bool intersect(const Vec3& origin, const Vec3& direction, double t_max, simd::TriangleHit& hit) const;
    bool occluded(const Vec3& origin, const Vec3& direction, double t_max) const;

    bool empty() const { return bvh_.empty(); }
    std::size_t size() const { return triangles_.size(); }
    const std::array<Vec3, 3>& triangle(std::size_t i) const { return triangles_[i]; }

private:
    std::vector<std::array<Vec3, 3>> triangles_;
    Bvh bvh_;
    std::vector<simd::TriangleBlock> blocks_;     // one per leaf
    std::vector<std::uint32_t> block_of_node_;
    std::vector<std::uint32_t> lane_item_;        // block * 4 + lane -> triangle
};

class SphereAccel {
public:
    void build(std::vector<Vec3> centers, std::vector<double> radii);

    bool intersect(const Vec3& origin, const Vec3& direction, double t_min, double t_max,
                   simd::SphereHit& hit) const;
    bool occluded(const Vec3& origin, const Vec3& direction, double t_min, double t_max) const;

    bool empty() const { return bvh_.empty(); }
    const Vec3& center(std::size_t i) const { return centers_[i]; }
    double radius(std::size_t i) const { return radii_[i]; }

private:
    std::vector<Vec3> centers_;
    std::vector<double> radii_;
    Bvh bvh_;
    std::vector<simd::SphereBlock> blocks_;
    std::vector<std::uint32_t> block_of_node_;
    std::vector<std::uint32_t> lane_item_;
};

}  // namespace scirender
