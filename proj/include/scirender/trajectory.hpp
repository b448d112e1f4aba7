#pragma once

// Camera keypoints refined into per-frame poses.
//
// Positions follow a centripetal Catmull-Rom spline through the keypoints;
// rotations are slerped between the bracketing keypoints with the same local
// parameter, so angular speed is piecewise constant.

#include <vector>

#include "scirender/math.hpp"

namespace scirender {

struct Keypoint {
    double time = 0;
    Vec3 position;
    Quat rotation;
};

class Trajectory {
public:
    /// Keeps keypoints sorted by time. Throws Error(duplicate_keypoint) when
    /// the time is already present and Error(invalid_argument) for non-finite
    /// times or a zero quaternion.
    void add_keypoint(const Keypoint& kp);

    const std::vector<Keypoint>& keypoints() const { return keypoints_; }
    bool empty() const { return keypoints_.empty(); }

private:
    std::vector<Keypoint> keypoints_;
};

/// One pose per frame time. Times outside the keypoint span clamp to the end
/// poses; a time equal to a keypoint time returns that keypoint exactly.
/// Throws Error(empty_trajectory).
std::vector<Pose> refine_trajectory(const Trajectory& traj, const std::vector<double>& frame_times);

/// Times from the first to the last keypoint at 1/fps spacing, both ends included.
std::vector<double> frame_times_for_fps(const Trajectory& traj, double fps);

}  // namespace scirender
