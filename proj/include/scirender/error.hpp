#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scirender {

enum class ErrorCode {
    invalid_argument,
    invalid_rotation,
    degenerate_look_at,
    tag_collision,
    not_found,
    missing_camera,
    invalid_primitive,
    invalid_geometry,
    bind_error,
    invalid_image,
    bounds_error,
    io_error,
    parse_error,
    schema_error,
    unsupported,
    insufficient_points,
    duplicate_keypoint,
    empty_trajectory,
    empty_reconstruction,
    invalid_target,
    atlas_capacity,
    empty_bake,
};

std::string_view to_string(ErrorCode code);

/// The single exception type thrown by the library. `stage` names the pipeline
/// step for multi-stage operations (meshify) and is empty otherwise.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string stage = {})
        : std::runtime_error(stage.empty() ? message : stage + ": " + message),
          code_(code),
          stage_(std::move(stage)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& stage() const noexcept { return stage_; }

private:
    ErrorCode code_;
    std::string stage_;
};

}  // namespace scirender
