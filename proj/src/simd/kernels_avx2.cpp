#ifdef __x86_64__
#ifndef __AVX2__
#error "this should be compiled with AVX2"
#endif

#include <immintrin.h>

#include "scirender/simd.hpp"

namespace scirender::simd::detail {

namespace {

inline __m256d load_lane(const double (&v)[kLanes]) { return _mm256_load_pd(v); }

}  // namespace

bool intersect_triangles_avx2(const WatertightRay& ray, std::span<const TriangleBlock> blocks,
                              double t_max, TriangleHit& hit) {
    const int kx = ray.kx, ky = ray.ky, kz = ray.kz;
    const __m256d ox = _mm256_set1_pd(ray.origin[kx]);
    const __m256d oy = _mm256_set1_pd(ray.origin[ky]);
    const __m256d oz = _mm256_set1_pd(ray.origin[kz]);
    const __m256d sx = _mm256_set1_pd(ray.sx);
    const __m256d sy = _mm256_set1_pd(ray.sy);
    const __m256d sz = _mm256_set1_pd(ray.sz);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d tmax = _mm256_set1_pd(t_max);

    double best = t_max;
    bool found = false;
    alignas(32) double t_arr[kLanes], u_arr[kLanes], v_arr[kLanes], w_arr[kLanes], d_arr[kLanes];

    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const TriangleBlock& blk = blocks[b];
        const __m256d a_x = _mm256_sub_pd(load_lane(blk.v[0][kx]), ox);
        const __m256d a_y = _mm256_sub_pd(load_lane(blk.v[0][ky]), oy);
        const __m256d a_z = _mm256_sub_pd(load_lane(blk.v[0][kz]), oz);
        const __m256d b_x = _mm256_sub_pd(load_lane(blk.v[1][kx]), ox);
        const __m256d b_y = _mm256_sub_pd(load_lane(blk.v[1][ky]), oy);
        const __m256d b_z = _mm256_sub_pd(load_lane(blk.v[1][kz]), oz);
        const __m256d c_x = _mm256_sub_pd(load_lane(blk.v[2][kx]), ox);
        const __m256d c_y = _mm256_sub_pd(load_lane(blk.v[2][ky]), oy);
        const __m256d c_z = _mm256_sub_pd(load_lane(blk.v[2][kz]), oz);

        const __m256d ax = _mm256_sub_pd(a_x, _mm256_mul_pd(sx, a_z));
        const __m256d ay = _mm256_sub_pd(a_y, _mm256_mul_pd(sy, a_z));
        const __m256d bx = _mm256_sub_pd(b_x, _mm256_mul_pd(sx, b_z));
        const __m256d by = _mm256_sub_pd(b_y, _mm256_mul_pd(sy, b_z));
        const __m256d cx = _mm256_sub_pd(c_x, _mm256_mul_pd(sx, c_z));
        const __m256d cy = _mm256_sub_pd(c_y, _mm256_mul_pd(sy, c_z));

        const __m256d u = _mm256_sub_pd(_mm256_mul_pd(cx, by), _mm256_mul_pd(cy, bx));
        const __m256d v = _mm256_sub_pd(_mm256_mul_pd(ax, cy), _mm256_mul_pd(ay, cx));
        const __m256d w = _mm256_sub_pd(_mm256_mul_pd(bx, ay), _mm256_mul_pd(by, ax));

        const __m256d neg = _mm256_or_pd(
            _mm256_or_pd(_mm256_cmp_pd(u, zero, _CMP_LT_OQ), _mm256_cmp_pd(v, zero, _CMP_LT_OQ)),
            _mm256_cmp_pd(w, zero, _CMP_LT_OQ));
        const __m256d pos = _mm256_or_pd(
            _mm256_or_pd(_mm256_cmp_pd(u, zero, _CMP_GT_OQ), _mm256_cmp_pd(v, zero, _CMP_GT_OQ)),
            _mm256_cmp_pd(w, zero, _CMP_GT_OQ));
        const __m256d det = _mm256_add_pd(_mm256_add_pd(u, v), w);

        const __m256d az = _mm256_mul_pd(sz, a_z);
        const __m256d bz = _mm256_mul_pd(sz, b_z);
        const __m256d cz = _mm256_mul_pd(sz, c_z);
        const __m256d tt = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(u, az), _mm256_mul_pd(v, bz)),
                                         _mm256_mul_pd(w, cz));
        const __m256d t = _mm256_div_pd(tt, det);

        __m256d valid = _mm256_andnot_pd(_mm256_and_pd(neg, pos), _mm256_cmp_pd(det, zero, _CMP_NEQ_OQ));
        valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, zero, _CMP_GT_OQ));
        valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, tmax, _CMP_LT_OQ));
        const int mask = _mm256_movemask_pd(valid);
        if (mask == 0) continue;

        _mm256_store_pd(t_arr, t);
        _mm256_store_pd(u_arr, u);
        _mm256_store_pd(v_arr, v);
        _mm256_store_pd(w_arr, w);
        _mm256_store_pd(d_arr, det);
        for (int l = 0; l < kLanes; ++l) {
            if (!(mask & (1 << l))) continue;
            if (t_arr[l] < best) {
                best = t_arr[l];
                found = true;
                hit.t = t_arr[l];
                hit.b0 = u_arr[l] / d_arr[l];
                hit.b1 = v_arr[l] / d_arr[l];
                hit.b2 = w_arr[l] / d_arr[l];
                hit.index = static_cast<std::uint32_t>(b * kLanes + l);
            }
        }
    }
    return found;
}

bool intersect_spheres_avx2(const Vec3& o, const Vec3& d, std::span<const SphereBlock> blocks,
                            double t_min, double t_max, SphereHit& hit) {
    const double a_s = ((d.x * d.x) + (d.y * d.y)) + (d.z * d.z);
    const __m256d a = _mm256_set1_pd(a_s);
    const __m256d dx = _mm256_set1_pd(d.x), dy = _mm256_set1_pd(d.y), dz = _mm256_set1_pd(d.z);
    const __m256d px = _mm256_set1_pd(o.x), py = _mm256_set1_pd(o.y), pz = _mm256_set1_pd(o.z);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d tmin = _mm256_set1_pd(t_min), tmax = _mm256_set1_pd(t_max);
    const __m256d sign_mask = _mm256_set1_pd(-0.0);

    double best = t_max;
    bool found = false;
    alignas(32) double t_arr[kLanes];

    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const SphereBlock& blk = blocks[b];
        const __m256d r = _mm256_load_pd(blk.radius);
        const __m256d ocx = _mm256_sub_pd(px, _mm256_load_pd(blk.cx));
        const __m256d ocy = _mm256_sub_pd(py, _mm256_load_pd(blk.cy));
        const __m256d ocz = _mm256_sub_pd(pz, _mm256_load_pd(blk.cz));
        const __m256d hb = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(ocx, dx), _mm256_mul_pd(ocy, dy)), _mm256_mul_pd(ocz, dz));
        const __m256d s = _mm256_div_pd(hb, a);
        const __m256d fx = _mm256_sub_pd(ocx, _mm256_mul_pd(dx, s));
        const __m256d fy = _mm256_sub_pd(ocy, _mm256_mul_pd(dy, s));
        const __m256d fz = _mm256_sub_pd(ocz, _mm256_mul_pd(dz, s));
        const __m256d l2 = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(fx, fx), _mm256_mul_pd(fy, fy)), _mm256_mul_pd(fz, fz));
        const __m256d r2 = _mm256_mul_pd(r, r);
        const __m256d disc = _mm256_sub_pd(r2, l2);
        const __m256d root = _mm256_sqrt_pd(_mm256_mul_pd(a, disc));
        // q = -(hb + root) when hb >= 0, else -(hb - root)
        const __m256d hb_nonneg = _mm256_cmp_pd(hb, zero, _CMP_GE_OQ);
        const __m256d q = _mm256_xor_pd(
            _mm256_blendv_pd(_mm256_sub_pd(hb, root), _mm256_add_pd(hb, root), hb_nonneg), sign_mask);
        const __m256d c = _mm256_sub_pd(
            _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(ocx, ocx), _mm256_mul_pd(ocy, ocy)),
                          _mm256_mul_pd(ocz, ocz)),
            r2);
        const __m256d t0 = _mm256_div_pd(q, a);
        const __m256d t1 = _mm256_div_pd(c, q);
        const __m256d t0_lt = _mm256_cmp_pd(t0, t1, _CMP_LT_OQ);
        const __m256d lo = _mm256_blendv_pd(t1, t0, t0_lt);
        const __m256d hi = _mm256_blendv_pd(t0, t1, t0_lt);
        const __m256d t = _mm256_blendv_pd(hi, lo, _mm256_cmp_pd(lo, tmin, _CMP_GT_OQ));

        __m256d valid = _mm256_cmp_pd(r, zero, _CMP_GT_OQ);
        valid = _mm256_and_pd(valid, _mm256_cmp_pd(disc, zero, _CMP_GE_OQ));
        valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, tmin, _CMP_GT_OQ));
        valid = _mm256_and_pd(valid, _mm256_cmp_pd(t, tmax, _CMP_LT_OQ));
        const int mask = _mm256_movemask_pd(valid);
        if (mask == 0) continue;
        _mm256_store_pd(t_arr, t);
        for (int l = 0; l < kLanes; ++l) {
            if ((mask & (1 << l)) && t_arr[l] < best) {
                best = t_arr[l];
                found = true;
                hit.t = t_arr[l];
                hit.index = static_cast<std::uint32_t>(b * kLanes + l);
            }
        }
    }
    return found;
}

void squared_distances_avx2(const double* xs, const double* ys, const double* zs, std::size_t n,
                            const Vec3& q, double* out) {
    const __m256d qx = _mm256_set1_pd(q.x), qy = _mm256_set1_pd(q.y), qz = _mm256_set1_pd(q.z);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), qx);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), qy);
        const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), qz);
        const __m256d s = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
                                        _mm256_mul_pd(dz, dz));
        _mm256_storeu_pd(out + i, s);
    }
    for (; i < n; ++i) {
        const double dx = xs[i] - q.x, dy = ys[i] - q.y, dz = zs[i] - q.z;
        out[i] = ((dx * dx) + (dy * dy)) + (dz * dz);
    }
}

void encode_srgb8_avx2(std::span<const double> linear, std::span<std::uint8_t> out) {
    const double* thr = srgb_thresholds();
    const std::size_t n = linear.size();
    std::size_t i = 0;
    alignas(32) std::int64_t codes[kLanes];
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d x = _mm256_loadu_pd(linear.data() + i);
        __m256i pos = _mm256_setzero_si256();
        for (int step = 128; step >= 1; step >>= 1) {
            const __m256i idx = _mm256_add_epi64(pos, _mm256_set1_epi64x(step - 1));
            const __m256d t = _mm256_i64gather_pd(thr, idx, 8);
            const __m256i ge = _mm256_castpd_si256(_mm256_cmp_pd(x, t, _CMP_GE_OQ));
            pos = _mm256_add_epi64(pos, _mm256_and_si256(ge, _mm256_set1_epi64x(step)));
        }
        _mm256_store_si256(reinterpret_cast<__m256i*>(codes), pos);
        for (int l = 0; l < kLanes; ++l) out[i + l] = static_cast<std::uint8_t>(codes[l]);
    }
    encode_srgb8_scalar(linear.subspan(i), out.subspan(i));
}

}  // namespace scirender::simd::detail

#endif  // __x86_64__
