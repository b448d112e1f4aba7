#pragma once

// Data-parallel inner loops with a scalar reference implementation and an AVX2
// variant selected at runtime.
//
// Every kernel performs the same IEEE operations in the same order in both
// variants (no FMA contraction), so results are bit-identical across levels.
// The equivalence tests in tests/unit/test_simd.cpp pin this down.

#include <cstddef>
#include <cstdint>
#include <span>

#include "scirender/math.hpp"

namespace scirender::simd {

enum class Level { scalar, avx2 };

const char* to_string(Level level);

/// Best level the running CPU supports.
Level detected_level();

/// Level used by the dispatching entry points. Starts at detected_level(),
/// or scalar when the environment variable SCIRENDER_SIMD=scalar is set.
Level active_level();
void set_active_level(Level level);

inline constexpr int kLanes = 4;

/// Four triangles in structure-of-arrays form. `v[c][k][lane]` is component k
/// (x, y, z) of vertex c. Unused lanes hold all-zero (degenerate) triangles,
/// which never report a hit.
struct alignas(32) TriangleBlock {
    double v[3][3][kLanes] = {};
};

/// Four spheres; unused lanes have radius 0 and never report a hit.
struct alignas(32) SphereBlock {
    double cx[kLanes] = {}, cy[kLanes] = {}, cz[kLanes] = {}, radius[kLanes] = {};
};

/// Per-ray constants for the watertight ray/triangle test (Woop, Benthin, Wald 2013).
struct WatertightRay {
    Vec3 origin;
    Vec3 direction;
    int kx = 0, ky = 1, kz = 2;
    double sx = 0, sy = 0, sz = 1;

    WatertightRay(const Vec3& o, const Vec3& d);
};

struct TriangleHit {
    double t = 0;
    double b0 = 0, b1 = 0, b2 = 0;  // barycentric weights of v0, v1, v2
    std::uint32_t index = 0;        // block * kLanes + lane
};

/// Closest hit with 0 < t < t_max over all lanes of `blocks`. Ties keep the
/// lowest index. Returns false when nothing is hit.
bool intersect_triangles(Level level, const WatertightRay& ray,
                         std::span<const TriangleBlock> blocks, double t_max, TriangleHit& hit);

struct SphereHit {
    double t = 0;
    std::uint32_t index = 0;
};

/// Closest sphere hit with t_min < t < t_max (front or back face).
bool intersect_spheres(Level level, const Vec3& origin, const Vec3& direction,
                       std::span<const SphereBlock> blocks, double t_min, double t_max,
                       SphereHit& hit);

/// out[i] = |p_i - q|^2 for SoA coordinates.
void squared_distances(Level level, const double* xs, const double* ys, const double* zs,
                       std::size_t n, const Vec3& q, double* out);

/// Linear [0,1] -> 8-bit sRGB with clamping and round-half-away-from-zero.
/// NaN encodes as 0.
void encode_srgb8(Level level, std::span<const double> linear, std::span<std::uint8_t> out);

// Dispatching conveniences using active_level().
inline bool intersect_triangles(const WatertightRay& ray, std::span<const TriangleBlock> blocks,
                                double t_max, TriangleHit& hit) {
    return intersect_triangles(active_level(), ray, blocks, t_max, hit);
}
inline bool intersect_spheres(const Vec3& origin, const Vec3& direction,
                              std::span<const SphereBlock> blocks, double t_min, double t_max,
                              SphereHit& hit) {
    return intersect_spheres(active_level(), origin, direction, blocks, t_min, t_max, hit);
}
inline void squared_distances(const double* xs, const double* ys, const double* zs, std::size_t n,
                              const Vec3& q, double* out) {
    squared_distances(active_level(), xs, ys, zs, n, q, out);
}
inline void encode_srgb8(std::span<const double> linear, std::span<std::uint8_t> out) {
    encode_srgb8(active_level(), linear, out);
}

/// Reference sRGB transfer; encode_srgb8 agrees with round(255 * srgb_oetf(clamp(x))).
double srgb_oetf(double linear);
double srgb_eotf(double encoded);
std::uint8_t encode_srgb8_reference(double linear);

namespace detail {

/// thresholds()[k] is the smallest double whose reference encoding is >= k + 1,
/// for k in [0, 255); entry 255 is +inf.
const double* srgb_thresholds();

bool intersect_triangles_scalar(const WatertightRay&, std::span<const TriangleBlock>, double,
                                TriangleHit&);
bool intersect_spheres_scalar(const Vec3&, const Vec3&, std::span<const SphereBlock>, double,
                              double, SphereHit&);
void squared_distances_scalar(const double*, const double*, const double*, std::size_t,
                              const Vec3&, double*);
void encode_srgb8_scalar(std::span<const double>, std::span<std::uint8_t>);

#if defined(__x86_64__) || defined(_M_X64)
bool intersect_triangles_avx2(const WatertightRay&, std::span<const TriangleBlock>, double,
                              TriangleHit&);
bool intersect_spheres_avx2(const Vec3&, const Vec3&, std::span<const SphereBlock>, double,
                            double, SphereHit&);
void squared_distances_avx2(const double*, const double*, const double*, std::size_t,
                            const Vec3&, double*);
void encode_srgb8_avx2(std::span<const double>, std::span<std::uint8_t>);
#endif

}  // namespace detail

}  // namespace scirender::simd
