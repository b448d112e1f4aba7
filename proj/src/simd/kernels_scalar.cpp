#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "scirender/simd.hpp"

namespace scirender::simd {

double srgb_oetf(double linear) {
    if (linear <= 0.0031308) return 12.92 * linear;
    return 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

double srgb_eotf(double encoded) {
    if (encoded <= 0.04045) return encoded / 12.92;
    return std::pow((encoded + 0.055) / 1.055, 2.4);
}

std::uint8_t encode_srgb8_reference(double linear) {
    if (std::isnan(linear)) return 0;
    const double c = std::clamp(linear, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::round(255.0 * srgb_oetf(c)));
}

WatertightRay::WatertightRay(const Vec3& o, const Vec3& d) : origin(o), direction(d) {
    const double ax = std::abs(d.x), ay = std::abs(d.y), az = std::abs(d.z);
    kz = (ax > ay) ? (ax > az ? 0 : 2) : (ay > az ? 1 : 2);
    kx = (kz + 1) % 3;
    ky = (kx + 1) % 3;
    if (d[kz] < 0) std::swap(kx, ky);
    sx = d[kx] / d[kz];
    sy = d[ky] / d[kz];
    sz = 1.0 / d[kz];
}

namespace detail {

const double* srgb_thresholds() {
    static const auto table = [] {
        std::array<double, 256> t{};
        for (int k = 1; k <= 255; ++k) {
            // Positive doubles order like their bit patterns; bisect on bits.
            std::uint64_t lo = std::bit_cast<std::uint64_t>(0.0);
            std::uint64_t hi = std::bit_cast<std::uint64_t>(1.0);
            while (hi - lo > 1) {
                const std::uint64_t mid = lo + (hi - lo) / 2;
                if (encode_srgb8_reference(std::bit_cast<double>(mid)) >= k)
                    hi = mid;
                else
                    lo = mid;
            }
            t[k - 1] = std::bit_cast<double>(hi);
        }
        t[255] = std::numeric_limits<double>::infinity();
        return t;
    }();
    return table.data();
}

bool intersect_triangles_scalar(const WatertightRay& ray, std::span<const TriangleBlock> blocks,
                                double t_max, TriangleHit& hit) {
    const int kx = ray.kx, ky = ray.ky, kz = ray.kz;
    const double ox = ray.origin[kx], oy = ray.origin[ky], oz = ray.origin[kz];
    double best = t_max;
    bool found = false;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const TriangleBlock& blk = blocks[b];
        for (int l = 0; l < kLanes; ++l) {
            const double a_x = blk.v[0][kx][l] - ox, a_y = blk.v[0][ky][l] - oy,
                         a_z = blk.v[0][kz][l] - oz;
            const double b_x = blk.v[1][kx][l] - ox, b_y = blk.v[1][ky][l] - oy,
                         b_z = blk.v[1][kz][l] - oz;
            const double c_x = blk.v[2][kx][l] - ox, c_y = blk.v[2][ky][l] - oy,
                         c_z = blk.v[2][kz][l] - oz;
            const double ax = a_x - ray.sx * a_z, ay = a_y - ray.sy * a_z;
            const double bx = b_x - ray.sx * b_z, by = b_y - ray.sy * b_z;
            const double cx = c_x - ray.sx * c_z, cy = c_y - ray.sy * c_z;
            const double u = cx * by - cy * bx;
            const double v = ax * cy - ay * cx;
            const double w = bx * ay - by * ax;
            const bool neg = (u < 0) || (v < 0) || (w < 0);
            const bool pos = (u > 0) || (v > 0) || (w > 0);
            if (neg && pos) continue;
            const double det = (u + v) + w;
            if (!(det != 0)) continue;
            const double az = ray.sz * a_z, bz = ray.sz * b_z, cz = ray.sz * c_z;
            const double tt = ((u * az) + (v * bz)) + (w * cz);
            const double t = tt / det;
            if (!(t > 0 && t < t_max)) continue;
            if (t < best) {
                best = t;
                found = true;
                hit.t = t;
                hit.b0 = u / det;
                hit.b1 = v / det;
                hit.b2 = w / det;
                hit.index = static_cast<std::uint32_t>(b * kLanes + l);
            }
        }
    }
    return found;
}

bool intersect_spheres_scalar(const Vec3& o, const Vec3& d, std::span<const SphereBlock> blocks,
                              double t_min, double t_max, SphereHit& hit) {
    const double a = ((d.x * d.x) + (d.y * d.y)) + (d.z * d.z);
    double best = t_max;
    bool found = false;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const SphereBlock& blk = blocks[b];
        for (int l = 0; l < kLanes; ++l) {
            const double r = blk.radius[l];
            if (!(r > 0)) continue;
            const double ocx = o.x - blk.cx[l], ocy = o.y - blk.cy[l], ocz = o.z - blk.cz[l];
            const double hb = ((ocx * d.x) + (ocy * d.y)) + (ocz * d.z);
            const double s = hb / a;
            const double fx = ocx - d.x * s, fy = ocy - d.y * s, fz = ocz - d.z * s;
            const double l2 = ((fx * fx) + (fy * fy)) + (fz * fz);
            const double disc = (r * r) - l2;
            if (!(disc >= 0)) continue;
            const double root = std::sqrt(a * disc);
            const double q = hb >= 0 ? -(hb + root) : -(hb - root);
            const double c = (((ocx * ocx) + (ocy * ocy)) + (ocz * ocz)) - (r * r);
            const double t0 = q / a;
            const double t1 = c / q;
            const double lo = t0 < t1 ? t0 : t1;
            const double hi = t0 < t1 ? t1 : t0;
            const double t = lo > t_min ? lo : hi;
            if (!(t > t_min && t < t_max)) continue;
            if (t < best) {
                best = t;
                found = true;
                hit.t = t;
                hit.index = static_cast<std::uint32_t>(b * kLanes + l);
            }
        }
    }
    return found;
}

void squared_distances_scalar(const double* xs, const double* ys, const double* zs, std::size_t n,
                              const Vec3& q, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - q.x, dy = ys[i] - q.y, dz = zs[i] - q.z;
        out[i] = ((dx * dx) + (dy * dy)) + (dz * dz);
    }
}

void encode_srgb8_scalar(std::span<const double> linear, std::span<std::uint8_t> out) {
    const double* thr = srgb_thresholds();
    for (std::size_t i = 0; i < linear.size(); ++i) {
        const double x = linear[i];
        unsigned pos = 0;
        for (unsigned step = 128; step >= 1; step >>= 1)
            if (x >= thr[pos + step - 1]) pos += step;
        out[i] = static_cast<std::uint8_t>(pos);
    }
}

}  // namespace detail
}  // namespace scirender::simd
