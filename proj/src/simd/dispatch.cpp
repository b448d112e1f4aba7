#include <atomic>
#include <cstdlib>
#include <string_view>

#include "scirender/simd.hpp"

namespace scirender::simd {

namespace {

Level initial_level() {
    if (const char* env = std::getenv("SCIRENDER_SIMD"); env && std::string_view(env) == "scalar")
        return Level::scalar;
    return detected_level();
}

std::atomic<Level>& level_slot() {
    static std::atomic<Level> level{initial_level()};
    return level;
}

}  // namespace

const char* to_string(Level level) { return level == Level::avx2 ? "avx2" : "scalar"; }

Level detected_level() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    static const Level level = __builtin_cpu_supports("avx2") ? Level::avx2 : Level::scalar;
    return level;
#else
    return Level::scalar;
#endif
}

Level active_level() { return level_slot().load(std::memory_order_relaxed); }

void set_active_level(Level level) {
    if (level == Level::avx2 && detected_level() != Level::avx2) level = Level::scalar;
    level_slot().store(level, std::memory_order_relaxed);
}

bool intersect_triangles(Level level, const WatertightRay& ray,
                         std::span<const TriangleBlock> blocks, double t_max, TriangleHit& hit) {
#ifdef __x86_64__
    if (level == Level::avx2) return detail::intersect_triangles_avx2(ray, blocks, t_max, hit);
#endif
    (void)level;
    return detail::intersect_triangles_scalar(ray, blocks, t_max, hit);
}

bool intersect_spheres(Level level, const Vec3& origin, const Vec3& direction,
                       std::span<const SphereBlock> blocks, double t_min, double t_max,
                       SphereHit& hit) {
#ifdef __x86_64__
    if (level == Level::avx2)
        return detail::intersect_spheres_avx2(origin, direction, blocks, t_min, t_max, hit);
#endif
    (void)level;
    return detail::intersect_spheres_scalar(origin, direction, blocks, t_min, t_max, hit);
}

void squared_distances(Level level, const double* xs, const double* ys, const double* zs,
                       std::size_t n, const Vec3& q, double* out) {
#ifdef __x86_64__
    if (level == Level::avx2) return detail::squared_distances_avx2(xs, ys, zs, n, q, out);
#endif
    (void)level;
    detail::squared_distances_scalar(xs, ys, zs, n, q, out);
}

void encode_srgb8(Level level, std::span<const double> linear, std::span<std::uint8_t> out) {
#ifdef __x86_64__
    if (level == Level::avx2) return detail::encode_srgb8_avx2(linear, out);
#endif
    (void)level;
    detail::encode_srgb8_scalar(linear, out);
}

}  // namespace scirender::simd
