#pragma once

// Exact nearest-neighbor queries with a kd-tree.

#include <cstdint>
#include <vector>

#include "scirender/math.hpp"

namespace scirender {

struct Neighbor {
    std::uint32_t index = 0;
    double dist2 = 0;
};

/// Neighbors are ordered by ascending distance, ties by ascending index, so
/// results do not depend on the tree layout.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::vector<Vec3> points);

    /// Exactly min(k, size()) neighbors.
    std::vector<Neighbor> knn(const Vec3& q, std::size_t k) const;

    /// All points with |p - q| <= r.
    std::vector<Neighbor> radius(const Vec3& q, double r) const;

    std::size_t size() const { return points_.size(); }
    const Vec3& point(std::size_t i) const { return points_[i]; }

private:
    struct Node {
        std::uint32_t begin = 0, end = 0;  // range in perm_ (leaves)
        std::uint32_t left = 0;            // interior: children left, left + 1
        bool leaf = true;
        Vec3 lo, hi;
    };

    void build(std::uint32_t self, std::uint32_t begin, std::uint32_t end);

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> perm_;
    std::vector<double> xs_, ys_, zs_;  // points in perm_ order
    std::vector<Node> nodes_;
};

}  // namespace scirender
