#pragma once

// Path tracer producing color, depth, albedo and alpha passes.

#include <cstdint>
#include <vector>

#include "scirender/image.hpp"
#include "scirender/scene.hpp"

namespace scirender {

struct RenderOutput {
    int width = 0;
    int height = 0;
    Image8 color;              // RGBA, sRGB; empty unless the color pass was requested
    Image linear;              // linear RGBA behind `color`
    std::vector<float> depth;  // row-major from the top row; 0 = no hit
    Image8 albedo;             // RGB, sRGB
    std::vector<float> alpha;  // row-major, in [0,1]
};

/// Renders `scene` from its camera using `settings` (the scene's own settings
/// are ignored). `threads` <= 0 uses the hardware concurrency. Output is
/// identical for any thread count.
/// Throws Error(missing_camera) and the validation errors of the scene objects.
RenderOutput render(const Scene& scene, const RenderSettings& settings, int threads = 0);

inline RenderOutput render(const Scene& scene, int threads = 0) {
    return render(scene, scene.settings, threads);
}

/// Clamp to [0,1], sRGB transfer, round half away from zero.
std::uint8_t tone_map(double linear);

struct ShadowCatcherResult {
    Vec3 color;
    double alpha = 0;
};

/// Composites a shadow-catcher sample. The shadow factor s = 1 - occ/free per
/// channel (0 where free is 0); color = background * (1 - s), alpha = mean(s).
ShadowCatcherResult trace_shadow_catcher(const Vec3& l_occ, const Vec3& l_free, const Vec3& background);

/// Per-pixel random stream keyed by (seed, pixel index, sample index).
class PixelSampler {
public:
    PixelSampler(std::uint64_t seed, std::uint64_t pixel, std::uint64_t sample);
    std::uint64_t next_u64();
    double next();  // uniform in [0, 1)
    Vec2 next2() {
        const double a = next();
        return {a, next()};
    }

private:
    std::uint64_t state_;
};

}  // namespace scirender
