#pragma once

// Light sources and their direct-illumination sampling.
//
// Units: point and spot strength in watts, directional and area strength in
// W/m^2, background strength scales a constant radiance. Spot, directional
// and area lights point along their local -Z axis.

#include <limits>
#include <optional>
#include <string>
#include <variant>

#include "scirender/math.hpp"

namespace scirender {

struct BackgroundLight {
    Vec3 color{1, 1, 1};
    double strength = 1;
};

struct PointLight {
    Vec3 color{1, 1, 1};
    double strength = 100;
    double radius = 0;  // > 0 samples the sphere for soft shadows
    bool cast_shadow = true;
    Pose pose;
};

struct DirectionalLight {
    Vec3 color{1, 1, 1};
    double strength = 1;
    double angular_diameter = 0;  // radians
    bool cast_shadow = true;
    Pose pose;
};

struct SpotLight {
    Vec3 color{1, 1, 1};
    double strength = 100;
    double cone_angle = kPi / 4;  // half-angle from the axis
    double blend = 0.15;
    bool cast_shadow = true;
    Pose pose;
};

enum class AreaShape { square, disc };

/// One-sided emitter in the local XY plane; square side or disc diameter = size.
struct AreaLight {
    Vec3 color{1, 1, 1};
    double strength = 1;
    AreaShape shape = AreaShape::square;
    double size = 1;
    bool cast_shadow = true;
    Pose pose;
};

using Light = std::variant<BackgroundLight, PointLight, DirectionalLight, SpotLight, AreaLight>;

const char* light_kind(const Light& light);

/// Throws Error(invalid_argument) on out-of-range fields.
void validate_light(const Light& light);

/// nullptr for the background light.
const Pose* light_pose(const Light& light);
Pose* light_pose(Light& light);

bool casts_shadow(const Light& light);

/// True when the light cannot be hit by a ray (point of zero radius, spot,
/// directional of zero diameter).
bool is_delta_light(const Light& light);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct LightSample {
    Vec3 direction;         // unit, from the shading point toward the light
    double distance = 0;    // to the sampled light point; infinity for distant lights
    Vec3 radiance_over_pdf; // incident radiance divided by the solid-angle pdf
    double pdf = 0;         // solid-angle pdf; 0 for delta lights
    bool needs_shadow_ray = true;
    bool valid = false;
};

/// Samples incident light at `p`. `n` orients the background's cosine
/// sampling; `u` is a uniform pair in [0,1)^2.
LightSample sample_direct(const Light& light, const Vec3& p, const Vec3& n, const Vec2& u);

/// Radiance seen along a ray that escapes the scene.
Vec3 escape_radiance(const Light& light, const Vec3& direction);

/// Solid-angle pdf that sample_direct would assign to `direction` from `p`.
double light_pdf(const Light& light, const Vec3& p, const Vec3& n, const Vec3& direction);

struct LightHit {
    double t = 0;
    Vec3 radiance;
};

/// Ray hit against a sphere point light or an area light (other kinds never hit).
std::optional<LightHit> intersect_light(const Light& light, const Vec3& origin, const Vec3& direction,
                                        double t_max);

}  // namespace scirender
