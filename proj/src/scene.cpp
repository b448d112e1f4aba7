#include "scirender/scene.hpp"

#include "scirender/error.hpp"

namespace scirender {

void validate_settings(const RenderSettings& s) {
    if (s.width < 1 || s.height < 1) throw Error(ErrorCode::invalid_argument, "resolution must be >= 1x1");
    if (s.samples_per_pixel < 1) throw Error(ErrorCode::invalid_argument, "samples_per_pixel must be >= 1");
    if (s.max_bounces < 1) throw Error(ErrorCode::invalid_argument, "max_bounces must be >= 1");
}

std::string Scene::next_tag(const std::string& kind) {
    std::uint64_t& n = counters_[kind];
    std::string tag;
    do {
        tag = kind + "_" + std::to_string(n++);
    } while (contains(tag));
    return tag;
}

void Scene::check_tag(const std::string& tag) const {
    if (tag.empty()) throw Error(ErrorCode::invalid_argument, "tag must not be empty");
    if (contains(tag)) throw Error(ErrorCode::tag_collision, "tag '" + tag + "' already exists");
}

std::string Scene::add_renderable(Renderable object, std::optional<std::string> tag) {
    validate_renderable(object);
    if (tag) check_tag(*tag);
    const std::string t = tag ? *tag : next_tag(renderable_kind(object));
    renderables_.emplace(t, std::move(object));
    return t;
}

std::string Scene::add_light(Light light, std::optional<std::string> tag) {
    validate_light(light);
    if (tag) check_tag(*tag);
    const std::string t = tag ? *tag : next_tag(light_kind(light));
    lights_.emplace(t, std::move(light));
    return t;
}

void Scene::remove(const std::string& tag) {
    if (renderables_.erase(tag) == 0 && lights_.erase(tag) == 0)
        throw Error(ErrorCode::not_found, "no object tagged '" + tag + "'");
}

void Scene::set_pose(const std::string& tag, const std::optional<Vec3>& position,
                     const std::optional<RotationSpec>& rotation) {
    Pose* pose = nullptr;
    if (auto it = renderables_.find(tag); it != renderables_.end()) {
        pose = &pose_of(it->second);
    } else if (auto lt = lights_.find(tag); lt != lights_.end()) {
        pose = light_pose(lt->second);
        if (!pose) throw Error(ErrorCode::invalid_argument, "'" + tag + "' has no pose");
    } else {
        throw Error(ErrorCode::not_found, "no object tagged '" + tag + "'");
    }
    if (position && !is_finite(*position))
        throw Error(ErrorCode::invalid_argument, "position must be finite");
    const Quat q = rotation ? to_quaternion(*rotation) : pose->rotation;
    if (position) pose->position = *position;
    pose->rotation = q;
}

bool Scene::contains(const std::string& tag) const {
    return renderables_.count(tag) != 0 || lights_.count(tag) != 0;
}

const Renderable& Scene::renderable(const std::string& tag) const {
    auto it = renderables_.find(tag);
    if (it == renderables_.end()) throw Error(ErrorCode::not_found, "no renderable tagged '" + tag + "'");
    return it->second;
}

const Light& Scene::light(const std::string& tag) const {
    auto it = lights_.find(tag);
    if (it == lights_.end()) throw Error(ErrorCode::not_found, "no light tagged '" + tag + "'");
    return it->second;
}

void Scene::set_camera(const Camera& camera) {
    validate_camera(camera);
    camera_ = camera;
}

}  // namespace scirender
