#include "scirender/knn.hpp"

#include <algorithm>
#include <queue>

#include "scirender/simd.hpp"

namespace scirender {

namespace {

constexpr std::uint32_t kLeafSize = 16;

bool closer(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

double box_distance2(const Vec3& lo, const Vec3& hi, const Vec3& q) {
    double d2 = 0;
    for (int k = 0; k < 3; ++k) {
        if (q[k] < lo[k]) d2 += (lo[k] - q[k]) * (lo[k] - q[k]);
        else if (q[k] > hi[k]) d2 += (q[k] - hi[k]) * (q[k] - hi[k]);
    }
    return d2;
}

}  // namespace

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    perm_.resize(points_.size());
    for (std::uint32_t i = 0; i < perm_.size(); ++i) perm_[i] = i;
    if (points_.empty()) return;
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    nodes_.emplace_back();
    build(0, 0, static_cast<std::uint32_t>(points_.size()));
    xs_.resize(points_.size());
    ys_.resize(points_.size());
    zs_.resize(points_.size());
    for (std::size_t i = 0; i < perm_.size(); ++i) {
        xs_[i] = points_[perm_[i]].x;
        ys_[i] = points_[perm_[i]].y;
        zs_[i] = points_[perm_[i]].z;
    }
}

void KdTree::build(std::uint32_t self, std::uint32_t begin, std::uint32_t end) {
    Vec3 lo = points_[perm_[begin]], hi = lo;
    for (std::uint32_t i = begin; i < end; ++i) {
        lo = min(lo, points_[perm_[i]]);
        hi = max(hi, points_[perm_[i]]);
    }
    nodes_[self].lo = lo;
    nodes_[self].hi = hi;
    nodes_[self].begin = begin;
    nodes_[self].end = end;
    if (end - begin <= kLeafSize) return;
    const Vec3 ext = hi - lo;
    int axis = 0;
    if (ext.y > ext[axis]) axis = 1;
    if (ext.z > ext[axis]) axis = 2;
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double ca = points_[a][axis], cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const auto left = static_cast<std::uint32_t>(nodes_.size());
    nodes_[self].leaf = false;
    nodes_[self].left = left;
    nodes_.emplace_back();
    nodes_.emplace_back();
    build(left, begin, mid);
    build(left + 1, mid, end);
}

namespace {

// Bounded max-heap keeping the k best neighbors under closer().
class BestK {
public:
    explicit BestK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

    bool full() const { return heap_.size() == k_; }
    const Neighbor& worst() const { return heap_.front(); }

    void offer(const Neighbor& n) {
        if (k_ == 0) return;
        if (!full()) {
            heap_.push_back(n);
            std::push_heap(heap_.begin(), heap_.end(), closer);
        } else if (closer(n, worst())) {
            std::pop_heap(heap_.begin(), heap_.end(), closer);
            heap_.back() = n;
            std::push_heap(heap_.begin(), heap_.end(), closer);
        }
    }

    std::vector<Neighbor> sorted() && {
        std::sort(heap_.begin(), heap_.end(), closer);
        return std::move(heap_);
    }

private:
    std::size_t k_;
    std::vector<Neighbor> heap_;
};

}  // namespace

std::vector<Neighbor> KdTree::knn(const Vec3& q, std::size_t k) const {
    BestK best(std::min(k, points_.size()));
    if (nodes_.empty() || k == 0) return {};
    double d2[kLeafSize];
    std::uint32_t stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        const Node& n = nodes_[stack[--sp]];
        // Equal distances may still win on index, so only prune strictly farther boxes.
        if (best.full() && box_distance2(n.lo, n.hi, q) > best.worst().dist2) continue;
        if (n.leaf) {
            const std::uint32_t cnt = n.end - n.begin;
            simd::squared_distances(&xs_[n.begin], &ys_[n.begin], &zs_[n.begin], cnt, q, d2);
            for (std::uint32_t i = 0; i < cnt; ++i) best.offer({perm_[n.begin + i], d2[i]});
            continue;
        }
        const Node& a = nodes_[n.left];
        const Node& b = nodes_[n.left + 1];
        const double da = box_distance2(a.lo, a.hi, q), db = box_distance2(b.lo, b.hi, q);
        if (da <= db) {
            stack[sp++] = n.left + 1;
            stack[sp++] = n.left;
        } else {
            stack[sp++] = n.left;
            stack[sp++] = n.left + 1;
        }
    }
    return std::move(best).sorted();
}

std::vector<Neighbor> KdTree::radius(const Vec3& q, double r) const {
    std::vector<Neighbor> out;
    if (nodes_.empty() || !(r >= 0)) return out;
    const double r2 = r * r;
    double d2[kLeafSize];
    std::uint32_t stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        const Node& n = nodes_[stack[--sp]];
        if (box_distance2(n.lo, n.hi, q) > r2) continue;
        if (n.leaf) {
            const std::uint32_t cnt = n.end - n.begin;
            simd::squared_distances(&xs_[n.begin], &ys_[n.begin], &zs_[n.begin], cnt, q, d2);
            for (std::uint32_t i = 0; i < cnt; ++i)
                if (d2[i] <= r2) out.push_back({perm_[n.begin + i], d2[i]});
            continue;
        }
        stack[sp++] = n.left + 1;
        stack[sp++] = n.left;
    }
    std::sort(out.begin(), out.end(), closer);
    return out;
}

}  // namespace scirender
