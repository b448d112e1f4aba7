#include "scirender/lights.hpp"

#include <cmath>

#include "scirender/error.hpp"

namespace scirender {

const char* light_kind(const Light& light) {
    switch (light.index()) {
        case 0: return "background";
        case 1: return "point";
        case 2: return "directional";
        case 3: return "spot";
        default: return "area";
    }
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

void check_common(const Vec3& color, double strength) {
    require(is_finite(color) && color.x >= 0 && color.y >= 0 && color.z >= 0,
            "light color must be finite and >= 0");
    require(std::isfinite(strength) && strength >= 0, "light strength must be finite and >= 0");
}

Vec3 local_axis(const Pose& pose) { return pose.apply_direction({0, 0, -1}); }

// 1 - cos(asin(s)) without cancellation for small s.
double one_minus_cos_from_sin2(double sin2) {
    return sin2 / (1.0 + std::sqrt(std::max(0.0, 1.0 - sin2)));
}

Vec3 sample_cone(const Vec3& axis, double one_minus_cos_max, const Vec2& u) {
    const double one_minus_cos = u.x * one_minus_cos_max;
    const double cos_t = 1.0 - one_minus_cos;
    const double sin_t = std::sqrt(std::max(0.0, one_minus_cos * (2.0 - one_minus_cos)));
    const double phi = 2.0 * kPi * u.y;
    Vec3 t, b;
    orthonormal_basis(axis, t, b);
    return normalize(t * (sin_t * std::cos(phi)) + b * (sin_t * std::sin(phi)) + axis * cos_t);
}

double smoothstep01(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

double spot_falloff(const SpotLight& s, const Vec3& light_to_point) {
    const double c = std::clamp(dot(local_axis(s.pose), light_to_point), -1.0, 1.0);
    const double angle = std::acos(c);
    if (angle >= s.cone_angle) return 0.0;
    const double inner = s.cone_angle * (1.0 - s.blend);
    if (angle <= inner) return 1.0;
    return smoothstep01((s.cone_angle - angle) / (s.cone_angle - inner));
}

double area_of(const AreaLight& a) {
    return a.shape == AreaShape::square ? a.size * a.size : 0.25 * kPi * a.size * a.size;
}

bool inside_area_shape(const AreaLight& a, const Vec3& local) {
    const double h = 0.5 * a.size;
    if (a.shape == AreaShape::square) return std::abs(local.x) <= h && std::abs(local.y) <= h;
    return local.x * local.x + local.y * local.y <= h * h;
}

Vec3 sphere_light_radiance(const PointLight& l) {
    return l.color * (l.strength / (4.0 * kPi * kPi * l.radius * l.radius));
}

Vec3 directional_radiance(const DirectionalLight& l) {
    const double s = std::sin(0.5 * l.angular_diameter);
    return l.color * (l.strength / (kPi * s * s));
}

double directional_one_minus_cos(const DirectionalLight& l) {
    const double half = 0.5 * l.angular_diameter;
    const double s = std::sin(0.5 * half);
    return 2.0 * s * s;
}

}  // namespace

void validate_light(const Light& light) {
    std::visit(
        [](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            check_common(l.color, l.strength);
            if constexpr (std::is_same_v<T, PointLight>) {
                require(std::isfinite(l.radius) && l.radius >= 0, "point light radius must be >= 0");
            } else if constexpr (std::is_same_v<T, DirectionalLight>) {
                require(std::isfinite(l.angular_diameter) && l.angular_diameter >= 0 &&
                            l.angular_diameter < kPi,
                        "angular_diameter must be in [0, pi)");
            } else if constexpr (std::is_same_v<T, SpotLight>) {
                require(l.cone_angle > 0 && l.cone_angle < kPi, "cone_angle must be in (0, pi)");
                require(l.blend >= 0 && l.blend <= 1, "blend must be in [0,1]");
            } else if constexpr (std::is_same_v<T, AreaLight>) {
                require(std::isfinite(l.size) && l.size > 0, "area light size must be > 0");
            }
        },
        light);
}

const Pose* light_pose(const Light& light) {
    return std::visit(
        [](const auto& l) -> const Pose* {
            if constexpr (std::is_same_v<std::decay_t<decltype(l)>, BackgroundLight>)
                return nullptr;
            else
                return &l.pose;
        },
        light);
}

Pose* light_pose(Light& light) {
    return const_cast<Pose*>(light_pose(static_cast<const Light&>(light)));
}

bool casts_shadow(const Light& light) {
    return std::visit(
        [](const auto& l) {
            if constexpr (std::is_same_v<std::decay_t<decltype(l)>, BackgroundLight>)
                return true;
            else
                return l.cast_shadow;
        },
        light);
}

bool is_delta_light(const Light& light) {
    if (const auto* p = std::get_if<PointLight>(&light)) return p->radius == 0;
    if (const auto* d = std::get_if<DirectionalLight>(&light)) return d->angular_diameter == 0;
    return std::holds_alternative<SpotLight>(light);
}

LightSample sample_direct(const Light& light, const Vec3& p, const Vec3& n, const Vec2& u) {
    LightSample s;
    s.needs_shadow_ray = casts_shadow(light);
    if (const auto* bg = std::get_if<BackgroundLight>(&light)) {
        const double r = std::sqrt(u.x), phi = 2.0 * kPi * u.y;
        const double cz = std::sqrt(std::max(0.0, 1.0 - u.x));
        if (cz <= 0.0) return s;
        Vec3 t, b;
        orthonormal_basis(n, t, b);
        s.direction = normalize(t * (r * std::cos(phi)) + b * (r * std::sin(phi)) + n * cz);
        s.distance = kInfinity;
        s.pdf = cz * kInvPi;
        s.radiance_over_pdf = bg->color * (bg->strength / s.pdf);
        s.valid = true;
    } else if (const auto* pl = std::get_if<PointLight>(&light)) {
        const Vec3 to = pl->pose.position - p;
        const double d2 = dot(to, to);
        if (!(d2 > 0.0)) return s;
        const double d = std::sqrt(d2);
        if (pl->radius == 0) {
            s.direction = to / d;
            s.distance = d;
            s.radiance_over_pdf = pl->color * (pl->strength / (4.0 * kPi * d2));
            s.valid = true;
            return s;
        }
        if (d <= pl->radius) return s;
        const double sin2 = pl->radius * pl->radius / d2;
        const double omc = one_minus_cos_from_sin2(sin2);
        s.direction = sample_cone(to / d, omc, u);
        const double b = dot(s.direction, to);
        const double disc = b * b - (d2 - pl->radius * pl->radius);
        s.distance = disc > 0.0 ? b - std::sqrt(disc) : b;
        s.pdf = 1.0 / (2.0 * kPi * omc);
        s.radiance_over_pdf = sphere_light_radiance(*pl) * (2.0 * kPi * omc);
        s.valid = true;
    } else if (const auto* dl = std::get_if<DirectionalLight>(&light)) {
        const Vec3 to_light = -local_axis(dl->pose);
        s.distance = kInfinity;
        if (dl->angular_diameter == 0) {
            s.direction = to_light;
            s.radiance_over_pdf = dl->color * dl->strength;
        } else {
            const double omc = directional_one_minus_cos(*dl);
            s.direction = sample_cone(to_light, omc, u);
            s.pdf = 1.0 / (2.0 * kPi * omc);
            s.radiance_over_pdf = directional_radiance(*dl) * (2.0 * kPi * omc);
        }
        s.valid = true;
    } else if (const auto* sp = std::get_if<SpotLight>(&light)) {
        const Vec3 to = sp->pose.position - p;
        const double d2 = dot(to, to);
        if (!(d2 > 0.0)) return s;
        const double d = std::sqrt(d2);
        s.direction = to / d;
        s.distance = d;
        const double f = spot_falloff(*sp, -s.direction);
        if (f == 0.0) return s;
        s.radiance_over_pdf = sp->color * (sp->strength * f / (4.0 * kPi * d2));
        s.valid = true;
    } else {
        const auto& al = std::get<AreaLight>(light);
        Vec3 local;
        const double h = 0.5 * al.size;
        if (al.shape == AreaShape::square) {
            local = {(2.0 * u.x - 1.0) * h, (2.0 * u.y - 1.0) * h, 0.0};
        } else {
            const double r = h * std::sqrt(u.x), phi = 2.0 * kPi * u.y;
            local = {r * std::cos(phi), r * std::sin(phi), 0.0};
        }
        const Vec3 q = al.pose.apply(local);
        const Vec3 to = q - p;
        const double d2 = dot(to, to);
        if (!(d2 > 0.0)) return s;
        const double d = std::sqrt(d2);
        s.direction = to / d;
        s.distance = d;
        const double cos_l = dot(local_axis(al.pose), -s.direction);
        if (cos_l <= 0.0) return s;
        const double area = area_of(al);
        s.pdf = d2 / (area * cos_l);
        s.radiance_over_pdf = al.color * (al.strength * kInvPi / s.pdf);
        s.valid = true;
    }
    return s;
}

Vec3 escape_radiance(const Light& light, const Vec3& direction) {
    if (const auto* bg = std::get_if<BackgroundLight>(&light)) return bg->color * bg->strength;
    if (const auto* dl = std::get_if<DirectionalLight>(&light)) {
        if (dl->angular_diameter == 0) return {};
        const double c = dot(direction, -local_axis(dl->pose));
        if (1.0 - c <= directional_one_minus_cos(*dl)) return directional_radiance(*dl);
    }
    return {};
}

double light_pdf(const Light& light, const Vec3& p, const Vec3& n, const Vec3& direction) {
    if (std::holds_alternative<BackgroundLight>(light)) return std::max(0.0, dot(n, direction)) * kInvPi;
    if (const auto* pl = std::get_if<PointLight>(&light)) {
        if (pl->radius == 0) return 0.0;
        const Vec3 to = pl->pose.position - p;
        const double d2 = dot(to, to);
        if (d2 <= pl->radius * pl->radius) return 0.0;
        const double omc = one_minus_cos_from_sin2(pl->radius * pl->radius / d2);
        const double c = dot(direction, to / std::sqrt(d2));
        return 1.0 - c <= omc ? 1.0 / (2.0 * kPi * omc) : 0.0;
    }
    if (const auto* dl = std::get_if<DirectionalLight>(&light)) {
        if (dl->angular_diameter == 0) return 0.0;
        const double omc = directional_one_minus_cos(*dl);
        const double c = dot(direction, -local_axis(dl->pose));
        return 1.0 - c <= omc ? 1.0 / (2.0 * kPi * omc) : 0.0;
    }
    if (const auto* al = std::get_if<AreaLight>(&light)) {
        const auto hit = intersect_light(light, p, direction, kInfinity);
        if (!hit) return 0.0;
        const double cos_l = dot(local_axis(al->pose), -direction);
        return hit->t * hit->t / (area_of(*al) * cos_l);
    }
    return 0.0;
}

std::optional<LightHit> intersect_light(const Light& light, const Vec3& origin, const Vec3& direction,
                                        double t_max) {
    if (const auto* pl = std::get_if<PointLight>(&light)) {
        if (pl->radius == 0) return std::nullopt;
        const Vec3 oc = origin - pl->pose.position;
        const double b = dot(oc, direction);
        const double c = dot(oc, oc) - pl->radius * pl->radius;
        if (c <= 0.0) return std::nullopt;
        const double disc = b * b - c;
        if (disc < 0.0) return std::nullopt;
        const double t = -b - std::sqrt(disc);
        if (!(t > 0.0 && t < t_max)) return std::nullopt;
        return LightHit{t, sphere_light_radiance(*pl)};
    }
    if (const auto* al = std::get_if<AreaLight>(&light)) {
        const Vec3 axis = local_axis(al->pose);
        const double denom = dot(direction, axis);
        if (denom >= 0.0) return std::nullopt;  // back side or parallel
        const double t = dot(al->pose.position - origin, axis) / denom;
        if (!(t > 0.0 && t < t_max)) return std::nullopt;
        const Vec3 local = al->pose.inverse_apply(origin + direction * t);
        if (!inside_area_shape(*al, local)) return std::nullopt;
        return LightHit{t, al->color * (al->strength * kInvPi)};
    }
    return std::nullopt;
}

}  // namespace scirender
