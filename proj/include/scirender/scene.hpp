#pragma once

// Scene container: tagged renderables and lights, one optional camera and the
// render settings.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "scirender/camera.hpp"
#include "scirender/lights.hpp"
#include "scirender/renderables.hpp"
#include "scirender/rotation.hpp"

namespace scirender {

struct Passes {
    bool color = true;
    bool depth = true;
    bool albedo = true;
    bool operator==(const Passes&) const = default;
};

struct RenderSettings {
    int width = 640;
    int height = 480;
    int samples_per_pixel = 16;
    int max_bounces = 4;
    std::uint64_t seed = 0;
    Passes passes;
    bool operator==(const RenderSettings&) const = default;
};

/// Throws Error(invalid_argument).
void validate_settings(const RenderSettings& s);

/// Tags are unique across renderables and lights. Auto-generated tags have the
/// form "<kind>_<n>" with one counter per kind; counters never go backwards, so
/// a removed object's tag is not handed out again.
class Scene {
public:
    using RenderableMap = std::map<std::string, Renderable>;
    using LightMap = std::map<std::string, Light>;

    RenderSettings settings;

    /// Validates the object. Throws Error(tag_collision) for a duplicate tag;
    /// the scene is unchanged on any error.
    std::string add_renderable(Renderable object, std::optional<std::string> tag = std::nullopt);
    std::string add_light(Light light, std::optional<std::string> tag = std::nullopt);

    /// Throws Error(not_found).
    void remove(const std::string& tag);

    /// Updates only the given components. Throws Error(not_found),
    /// Error(invalid_rotation), or Error(invalid_argument) for the background
    /// light, which has no pose.
    void set_pose(const std::string& tag, const std::optional<Vec3>& position,
                  const std::optional<RotationSpec>& rotation);

    bool contains(const std::string& tag) const;
    const Renderable& renderable(const std::string& tag) const;
    const Light& light(const std::string& tag) const;
    const RenderableMap& renderables() const { return renderables_; }
    const LightMap& lights() const { return lights_; }

    void set_camera(const Camera& camera);
    void clear_camera() { camera_.reset(); }
    const std::optional<Camera>& camera() const { return camera_; }

private:
    std::string next_tag(const std::string& kind);
    void check_tag(const std::string& tag) const;

    RenderableMap renderables_;
    LightMap lights_;
    std::optional<Camera> camera_;
    std::map<std::string, std::uint64_t> counters_;
};

}  // namespace scirender
