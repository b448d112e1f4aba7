#include "scirender/renderer.hpp"

#include <atomic>
#include <cmath>
#include <deque>
#include <mutex>
#include <thread>

#include "scirender/bvh.hpp"
#include "scirender/error.hpp"
#include "scirender/simd.hpp"

namespace scirender {

// ------------------------------------------------------------------ helpers

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

PixelSampler::PixelSampler(std::uint64_t seed, std::uint64_t pixel, std::uint64_t sample) {
    state_ = splitmix(splitmix(splitmix(seed) ^ pixel) ^ (sample * 0xD1B54A32D192ED03ull));
}

std::uint64_t PixelSampler::next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double PixelSampler::next() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint8_t tone_map(double linear) { return simd::encode_srgb8_reference(linear); }

ShadowCatcherResult trace_shadow_catcher(const Vec3& l_occ, const Vec3& l_free, const Vec3& background) {
    Vec3 s;
    for (int k = 0; k < 3; ++k) s[k] = l_free[k] > 0.0 ? std::clamp(1.0 - l_occ[k] / l_free[k], 0.0, 1.0) : 0.0;
    ShadowCatcherResult r;
    r.color = background * (Vec3{1, 1, 1} - s);
    r.alpha = (s.x + s.y + s.z) / 3.0;
    return r;
}

// ----------------------------------------------------------- scene compile

namespace {

constexpr std::uint32_t kNoInstance = 0xFFFFFFFFu;

struct SurfaceObject {
    const TriMesh* geom = nullptr;
    Pose pose;
    const ColorSource* colors = nullptr;
    const Material* material = nullptr;
    const FaceSegments* segments = nullptr;
    const PointCloud* cloud = nullptr;
};

struct TriRef {
    std::uint32_t object;
    std::uint32_t face;
    std::uint32_t instance;
};

struct SphereRef {
    std::uint32_t object;
    std::uint32_t instance;
};

struct Surface {
    double t = 0;
    Vec3 p, ng, ns;
    Vec3 base;
    Vec3 albedo;
    double alpha = 1;
    Vec3 emission;
    Material material;
    bool catcher = false;
};

class World {
public:
    World(const Scene& scene, const Camera& cam) : camera(cam) {
        for (const auto& [tag, r] : scene.renderables()) add(r);
        for (const auto& [tag, l] : scene.lights()) {
            lights.push_back(&l);
            if (const auto* bg = std::get_if<BackgroundLight>(&l)) background += bg->color * bg->strength;
        }
        std::vector<std::array<Vec3, 3>> tris, ctris;
        for (const auto& [tri, ref] : pending_) tris.push_back(tri);
        for (const auto& [tri, ref] : pending_catcher_) ctris.push_back(tri);
        for (const auto& [tri, ref] : pending_) tri_refs.push_back(ref);
        for (const auto& [tri, ref] : pending_catcher_) catcher_refs.push_back(ref);
        pending_.clear();
        pending_catcher_.clear();
        main.build(std::move(tris));
        catchers.build(std::move(ctris));
        spheres.build(std::move(sphere_centers_), std::move(sphere_radii_));
    }

    Camera camera;
    std::vector<SurfaceObject> objects;
    std::vector<TriRef> tri_refs, catcher_refs;
    std::vector<SphereRef> sphere_refs;
    TriangleAccel main, catchers;
    SphereAccel spheres;
    std::vector<const Light*> lights;
    Vec3 background;
    std::deque<TriMesh> owned;
    std::vector<std::vector<PointInstance>> instances;  // per object (clouds only)

    bool intersect(const Vec3& o, const Vec3& d, bool camera_ray, Surface& s) const;
    bool occluded(const Vec3& o, const Vec3& d, double t_max) const {
        if (!main.empty() && main.occluded(o, d, t_max)) return true;
        return !spheres.empty() && spheres.occluded(o, d, 0.0, t_max);
    }

private:
    void add(const Renderable& r);
    void add_mesh(const TriMesh* geom, const Pose& pose, const ColorSource* colors, const Material* mat,
                  const FaceSegments* seg, bool catcher);

    std::vector<std::pair<std::array<Vec3, 3>, TriRef>> pending_, pending_catcher_;
    std::vector<Vec3> sphere_centers_;
    std::vector<double> sphere_radii_;

    void resolve_triangle(const TriRef& ref, const std::array<Vec3, 3>& tri, const simd::TriangleHit& h,
                          const Vec3& d, Surface& s) const;
};

void World::add_mesh(const TriMesh* geom, const Pose& pose, const ColorSource* colors, const Material* mat,
                     const FaceSegments* seg, bool catcher) {
    const auto obj = static_cast<std::uint32_t>(objects.size());
    objects.push_back({geom, pose, colors, mat, seg, nullptr});
    instances.emplace_back();
    std::vector<Vec3> world(geom->vertices.size());
    for (std::size_t i = 0; i < world.size(); ++i) world[i] = pose.apply(geom->vertices[i]);
    for (std::size_t f = 0; f < geom->faces.size(); ++f) {
        const Face& fc = geom->faces[f];
        std::array<Vec3, 3> tri{world[fc[0]], world[fc[1]], world[fc[2]]};
        TriRef ref{obj, static_cast<std::uint32_t>(f), kNoInstance};
        (catcher ? pending_catcher_ : pending_).emplace_back(tri, ref);
    }
}

void World::add(const Renderable& r) {
    if (const auto* m = std::get_if<Mesh>(&r)) {
        add_mesh(&m->geometry, m->pose, &m->appearance.colors, &m->appearance.material,
                 m->segments ? &*m->segments : nullptr, false);
    } else if (const auto* p = std::get_if<Primitive>(&r)) {
        owned.push_back(tessellate(p->spec));
        add_mesh(&owned.back(), p->pose, &p->appearance.colors, &p->appearance.material, nullptr,
                 is_shadow_catcher(r));
    } else {
        const auto& pc = std::get<PointCloud>(r);
        const auto obj = static_cast<std::uint32_t>(objects.size());
        owned.push_back(point_cube({0, 0, 0}, 1.0));
        objects.push_back({&owned.back(), Pose{}, nullptr, &pc.material, nullptr, &pc});
        instances.push_back(point_instances(pc));
        const auto& inst = instances.back();
        for (std::size_t i = 0; i < inst.size(); ++i) {
            if (inst[i].shape == PointShape::sphere) {
                sphere_centers_.push_back(inst[i].center);
                sphere_radii_.push_back(inst[i].radius);
                sphere_refs.push_back({obj, static_cast<std::uint32_t>(i)});
            } else {
                const TriMesh box = point_cube(inst[i].center, inst[i].radius);
                for (std::size_t f = 0; f < box.faces.size(); ++f) {
                    const Face& fc = box.faces[f];
                    pending_.emplace_back(std::array<Vec3, 3>{box.vertices[fc[0]], box.vertices[fc[1]],
                                                              box.vertices[fc[2]]},
                                          TriRef{obj, static_cast<std::uint32_t>(f),
                                                 static_cast<std::uint32_t>(i)});
                }
            }
        }
    }
}

Material as_material(const BaseMaterial& b) {
    if (const auto* p = std::get_if<PrincipledMaterial>(&b)) return *p;
    return std::get<GlossyMaterial>(b);
}

void orient(const Vec3& d, Vec3& ng, Vec3& ns) {
    if (dot(ng, d) > 0.0) {
        ng = -ng;
        ns = -ns;
    }
    if (dot(ns, d) >= 0.0) ns = ng;
}

void World::resolve_triangle(const TriRef& ref, const std::array<Vec3, 3>& tri, const simd::TriangleHit& h,
                             const Vec3& d, Surface& s) const {
    const SurfaceObject& obj = objects[ref.object];
    const Vec3 bary{h.b0, h.b1, h.b2};
    s.p = tri[0] * h.b0 + tri[1] * h.b1 + tri[2] * h.b2;
    s.ng = normalize(cross(tri[1] - tri[0], tri[2] - tri[0]));
    s.ns = s.ng;
    if (ref.instance != kNoInstance) {
        const PointInstance& inst = instances[ref.object][ref.instance];
        s.base = inst.color.rgb();
        s.albedo = s.base;
        s.alpha = inst.color.w * material_alpha(*obj.material);
        s.emission = inst.color.rgb() * inst.emission + material_emission(*obj.material);
        s.material = *obj.material;
        orient(d, s.ng, s.ns);
        return;
    }
    const TriMesh& g = *obj.geom;
    if (g.has_normals()) {
        const Face& f = g.faces[ref.face];
        const Vec3 n = g.normals[f[0]] * h.b0 + g.normals[f[1]] * h.b1 + g.normals[f[2]] * h.b2;
        const double len = length(n);
        if (len > 0.0) s.ns = obj.pose.apply_direction(n / len);
    }
    const Material& mat = obj.segments ? obj.segments->materials[obj.segments->ids[ref.face]] : *obj.material;
    const Vec4 c = shade_color(g, ref.face, bary, *obj.colors);
    s.base = c.rgb();
    s.albedo = c.rgb();
    s.alpha = c.w * material_alpha(mat);
    s.emission = material_emission(mat);
    if (const auto* w = std::get_if<WireframeMaterial>(&mat)) {
        s.material = as_material(w->base);
        if (wireframe_factor(tri[0], tri[1], tri[2], bary, w->thickness) >= 1.0) {
            s.base = w->wire_color;
            s.albedo = w->wire_color;
        }
    } else {
        s.material = mat;
    }
    orient(d, s.ng, s.ns);
}

bool World::intersect(const Vec3& o, const Vec3& d, bool camera_ray, Surface& s) const {
    double t_max = kInfinity;
    int kind = 0;  // 1 triangle, 2 sphere, 3 catcher
    simd::TriangleHit th, ch;
    simd::SphereHit sh;
    if (!main.empty() && main.intersect(o, d, t_max, th)) {
        t_max = th.t;
        kind = 1;
    }
    if (!spheres.empty() && spheres.intersect(o, d, 0.0, t_max, sh)) {
        t_max = sh.t;
        kind = 2;
    }
    if (camera_ray && !catchers.empty() && catchers.intersect(o, d, t_max, ch)) {
        t_max = ch.t;
        kind = 3;
    }
    if (kind == 0) return false;
    s = Surface{};
    s.t = t_max;
    if (kind == 1) {
        resolve_triangle(tri_refs[th.index], main.triangle(th.index), th, d, s);
    } else if (kind == 3) {
        resolve_triangle(catcher_refs[ch.index], catchers.triangle(ch.index), ch, d, s);
        s.catcher = true;
    } else {
        const SphereRef& ref = sphere_refs[sh.index];
        const PointInstance& inst = instances[ref.object][ref.instance];
        const Material& mat = *objects[ref.object].material;
        s.p = o + d * sh.t;
        s.ng = normalize(s.p - inst.center);
        s.ns = s.ng;
        s.base = inst.color.rgb();
        s.albedo = s.base;
        s.alpha = inst.color.w * material_alpha(mat);
        s.emission = inst.color.rgb() * inst.emission + material_emission(mat);
        s.material = mat;
        if (const auto* w = std::get_if<WireframeMaterial>(&mat)) s.material = as_material(w->base);
        orient(d, s.ng, s.ns);
    }
    return true;
}

// --------------------------------------------------------------- integrator

double offset_scale(const Vec3& p) {
    return 1e-7 * (1.0 + std::max({std::abs(p.x), std::abs(p.y), std::abs(p.z)}));
}

Vec3 offset_along(const Vec3& p, const Vec3& ng, const Vec3& dir) {
    const double e = offset_scale(p);
    return dot(ng, dir) >= 0.0 ? p + ng * e : p - ng * e;
}

double power_heuristic(double a, double b) {
    const double a2 = a * a, b2 = b * b;
    return a2 + b2 > 0.0 ? a2 / (a2 + b2) : 0.0;
}

struct PathResult {
    Vec3 radiance;
    double alpha = 0;
    bool catcher = false;
    Vec3 occ, free;
};

constexpr int kMaxPassThrough = 64;
constexpr int kRouletteStart = 3;

class Integrator {
public:
    Integrator(const World& w, const RenderSettings& s) : world_(w), settings_(s) {}

    PathResult trace(Vec3 o, Vec3 d, PixelSampler& rng) const;
    void catcher_direct(const Surface& s, PixelSampler& rng, Vec3& occ, Vec3& free) const;

private:
    Vec3 direct(const Surface& s, const Vec3& wo, PixelSampler& rng) const;

    const World& world_;
    const RenderSettings& settings_;
};

Vec3 Integrator::direct(const Surface& s, const Vec3& wo, PixelSampler& rng) const {
    Vec3 sum;
    for (const Light* light : world_.lights) {
        const Vec2 u = rng.next2();
        const LightSample ls = sample_direct(*light, s.p, s.ns, u);
        if (!ls.valid) continue;
        const double cos_i = dot(s.ns, ls.direction);
        if (cos_i <= 0.0 || dot(s.ng, ls.direction) <= 0.0) continue;
        const Vec3 f = eval_bsdf(s.material, s.ns, wo, ls.direction, s.base);
        if (f.x == 0.0 && f.y == 0.0 && f.z == 0.0) continue;
        if (ls.needs_shadow_ray) {
            const Vec3 origin = offset_along(s.p, s.ng, ls.direction);
            const double t_max = std::isinf(ls.distance) ? kInfinity : ls.distance * (1.0 - 1e-7);
            if (world_.occluded(origin, ls.direction, t_max)) continue;
        }
        double w = 1.0;
        if (ls.pdf > 0.0 && casts_shadow(*light))
            w = power_heuristic(ls.pdf, pdf_bsdf(s.material, s.ns, wo, ls.direction, s.base));
        sum += f * ls.radiance_over_pdf * (cos_i * w);
    }
    return sum;
}

void Integrator::catcher_direct(const Surface& s, PixelSampler& rng, Vec3& occ, Vec3& free) const {
    for (const Light* light : world_.lights) {
        const LightSample ls = sample_direct(*light, s.p, s.ng, rng.next2());
        if (!ls.valid) continue;
        const double cos_i = dot(s.ng, ls.direction);
        if (cos_i <= 0.0) continue;
        const Vec3 c = ls.radiance_over_pdf * (cos_i * kInvPi);
        free += c;
        if (ls.needs_shadow_ray) {
            const Vec3 origin = offset_along(s.p, s.ng, ls.direction);
            const double t_max = std::isinf(ls.distance) ? kInfinity : ls.distance * (1.0 - 1e-7);
            if (world_.occluded(origin, ls.direction, t_max)) continue;
        }
        occ += c;
    }
}

PathResult Integrator::trace(Vec3 o, Vec3 d, PixelSampler& rng) const {
    PathResult r;
    Vec3 beta{1, 1, 1};
    double prev_pdf = 0;
    Vec3 prev_p, prev_n;
    int pass = 0;
    for (int bounce = 0;;) {
        Surface s;
        const bool hit = world_.intersect(o, d, bounce == 0, s);
        const double t_hit = hit ? s.t : kInfinity;

        // Emitters reached by BSDF sampling, weighted against light sampling.
        if (bounce > 0) {
            for (const Light* light : world_.lights) {
                if (!casts_shadow(*light)) continue;
                if (const auto lh = intersect_light(*light, o, d, t_hit)) {
                    const double w = power_heuristic(prev_pdf, light_pdf(*light, prev_p, prev_n, d));
                    r.radiance += beta * lh->radiance * w;
                }
            }
        }

        if (!hit) {
            for (const Light* light : world_.lights) {
                const Vec3 le = escape_radiance(*light, d);
                if (le.x == 0.0 && le.y == 0.0 && le.z == 0.0) continue;
                double w = 1.0;
                if (bounce > 0) {
                    if (!casts_shadow(*light)) continue;
                    w = power_heuristic(prev_pdf, light_pdf(*light, prev_p, prev_n, d));
                }
                r.radiance += beta * le * w;
            }
            break;
        }

        if (s.catcher) {
            r.catcher = true;
            r.alpha = 0;
            catcher_direct(s, rng, r.occ, r.free);
            break;
        }

        if (s.alpha < 1.0 && pass < kMaxPassThrough && rng.next() >= s.alpha) {
            o = offset_along(s.p, s.ng, d);
            ++pass;
            continue;
        }
        if (bounce == 0) r.alpha = 1;

        r.radiance += beta * s.emission;
        if (bounce >= settings_.max_bounces) break;

        const Vec3 wo = -d;
        r.radiance += beta * direct(s, wo, rng);

        const Vec2 u = rng.next2();
        const BsdfSample bs = sample_bsdf(s.material, s.ns, wo, s.base, u, rng.next());
        if (!bs.valid || dot(s.ng, bs.wi) <= 0.0) break;
        beta *= bs.weight;
        prev_pdf = bs.pdf;
        prev_p = s.p;
        prev_n = s.ns;
        o = offset_along(s.p, s.ng, bs.wi);
        d = bs.wi;
        ++bounce;
        if (bounce >= kRouletteStart) {
            const double q = std::min(1.0, max_component(beta));
            if (rng.next() >= q) break;
            beta = beta / q;
        }
    }
    if (!is_finite(r.radiance)) r.radiance = {};
    return r;
}

// ------------------------------------------------------------------ tiling

constexpr int kTile = 32;

struct PixelAccum {
    Vec3 color;
    double alpha;
};

}  // namespace

RenderOutput render(const Scene& scene, const RenderSettings& settings, int threads) {
    if (!scene.camera()) throw Error(ErrorCode::missing_camera, "scene has no camera");
    validate_settings(settings);
    for (const auto& [tag, r] : scene.renderables()) validate_renderable(r);
    const Camera cam = with_resolution(*scene.camera(), settings.width, settings.height);
    const World world(scene, cam);
    const Integrator integrator(world, settings);

    const int W = settings.width, H = settings.height;
    const std::size_t n = static_cast<std::size_t>(W) * H;
    RenderOutput out;
    out.width = W;
    out.height = H;
    std::vector<Vec3> color(n);
    std::vector<double> alpha(n, 0.0);
    std::vector<Vec3> albedo(n);
    std::vector<float> depth(n, 0.0f);

    const int tiles_x = (W + kTile - 1) / kTile, tiles_y = (H + kTile - 1) / kTile;
    const int tiles = tiles_x * tiles_y;
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        try {
            for (int tile = next++; tile < tiles; tile = next++) {
                const int x0 = (tile % tiles_x) * kTile, y0 = (tile / tiles_x) * kTile;
                for (int y = y0; y < std::min(y0 + kTile, H); ++y) {
                    for (int x = x0; x < std::min(x0 + kTile, W); ++x) {
                        const std::size_t pix = static_cast<std::size_t>(y) * W + x;
                        if (settings.passes.depth || settings.passes.albedo) {
                            const Ray ray = generate_ray(cam, x, y, {0.5, 0.5});
                            Surface s;
                            if (world.intersect(ray.origin, ray.direction, true, s)) {
                                depth[pix] = static_cast<float>(s.t);
                                albedo[pix] = s.albedo;
                            }
                        }
                        if (!settings.passes.color) continue;
                        Vec3 sum, occ, free;
                        double a = 0;
                        int catcher = 0;
                        for (int k = 0; k < settings.samples_per_pixel; ++k) {
                            PixelSampler rng(settings.seed, pix, static_cast<std::uint64_t>(k));
                            const Vec2 j = rng.next2();
                            const Ray ray = generate_ray(cam, x, y, j);
                            const PathResult pr = integrator.trace(ray.origin, ray.direction, rng);
                            if (pr.catcher) {
                                ++catcher;
                                occ += pr.occ;
                                free += pr.free;
                            } else {
                                sum += pr.radiance;
                                a += pr.alpha;
                            }
                        }
                        if (catcher > 0) {
                            const ShadowCatcherResult sc = trace_shadow_catcher(occ, free, world.background);
                            sum += sc.color * catcher;
                            a += sc.alpha * catcher;
                        }
                        const double inv = 1.0 / settings.samples_per_pixel;
                        color[pix] = sum * inv;
                        alpha[pix] = a * inv;
                    }
                }
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = tiles;
        }
    };

    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, tiles);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    if (settings.passes.color) {
        out.linear = Image(W, H);
        for (std::size_t i = 0; i < n; ++i)
            out.linear.set(static_cast<int>(i % W), static_cast<int>(i / W), Vec4(color[i], alpha[i]));
        out.color = encode_srgb(out.linear, 4);
        out.alpha.assign(alpha.begin(), alpha.end());
    }
    if (settings.passes.depth) out.depth = std::move(depth);
    if (settings.passes.albedo) {
        Image a(W, H);
        for (std::size_t i = 0; i < n; ++i) a.set(static_cast<int>(i % W), static_cast<int>(i / W), Vec4(albedo[i], 1.0));
        out.albedo = encode_srgb(a, 3);
    }
    return out;
}

}  // namespace scirender
