#include "scirender/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scirender/error.hpp"
#include "scirender/rotation.hpp"

namespace scirender {

void Trajectory::add_keypoint(const Keypoint& kp) {
    if (!std::isfinite(kp.time)) throw Error(ErrorCode::invalid_argument, "keypoint time must be finite");
    if (!is_finite(kp.position)) throw Error(ErrorCode::invalid_argument, "keypoint position must be finite");
    const Quat q = to_quaternion(kp.rotation);
    auto it = std::lower_bound(keypoints_.begin(), keypoints_.end(), kp.time,
                               [](const Keypoint& a, double t) { return a.time < t; });
    if (it != keypoints_.end() && it->time == kp.time)
        throw Error(ErrorCode::duplicate_keypoint, "a keypoint at time " + std::to_string(kp.time) + " exists");
    keypoints_.insert(it, Keypoint{kp.time, kp.position, q});
}

namespace {

Vec3 blend(const Vec3& a, const Vec3& b, double ta, double tb, double t) {
    return a * ((tb - t) / (tb - ta)) + b * ((t - ta) / (tb - ta));
}

// Centripetal Catmull-Rom between p1 and p2 at local parameter u in [0,1].
Vec3 catmull_rom(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3, double u) {
    const double d12 = std::sqrt(distance(p1, p2));
    if (d12 == 0.0) return p1;
    double d01 = std::sqrt(distance(p0, p1));
    double d23 = std::sqrt(distance(p2, p3));
    if (d01 == 0.0) d01 = d12;
    if (d23 == 0.0) d23 = d12;
    const double t0 = 0.0, t1 = d01, t2 = t1 + d12, t3 = t2 + d23;
    const double t = t1 + u * d12;
    const Vec3 a1 = blend(p0, p1, t0, t1, t);
    const Vec3 a2 = blend(p1, p2, t1, t2, t);
    const Vec3 a3 = blend(p2, p3, t2, t3, t);
    const Vec3 b1 = blend(a1, a2, t0, t2, t);
    const Vec3 b2 = blend(a2, a3, t1, t3, t);
    return blend(b1, b2, t1, t2, t);
}

}  // namespace

std::vector<Pose> refine_trajectory(const Trajectory& traj, const std::vector<double>& frame_times) {
    const auto& k = traj.keypoints();
    if (k.empty()) throw Error(ErrorCode::empty_trajectory, "trajectory has no keypoints");
    std::vector<Pose> out;
    out.reserve(frame_times.size());
    for (double time : frame_times) {
        if (time <= k.front().time) {
            out.push_back({k.front().position, k.front().rotation});
            continue;
        }
        if (time >= k.back().time) {
            out.push_back({k.back().position, k.back().rotation});
            continue;
        }
        // k[i].time <= time < k[i+1].time
        const auto it = std::upper_bound(k.begin(), k.end(), time,
                                         [](double t, const Keypoint& a) { return t < a.time; });
        const std::size_t i = static_cast<std::size_t>(it - k.begin()) - 1;
        if (k[i].time == time) {
            out.push_back({k[i].position, k[i].rotation});
            continue;
        }
        const double u = (time - k[i].time) / (k[i + 1].time - k[i].time);
        const Vec3& p1 = k[i].position;
        const Vec3& p2 = k[i + 1].position;
        // Mirrored phantom points at the ends keep the end segments well defined.
        const Vec3 p0 = i > 0 ? k[i - 1].position : p1 * 2.0 - p2;
        const Vec3 p3 = i + 2 < k.size() ? k[i + 2].position : p2 * 2.0 - p1;
        out.push_back({catmull_rom(p0, p1, p2, p3, u), slerp(k[i].rotation, k[i + 1].rotation, u)});
    }
    return out;
}

std::vector<double> frame_times_for_fps(const Trajectory& traj, double fps) {
    if (!(fps > 0) || !std::isfinite(fps)) throw Error(ErrorCode::invalid_argument, "fps must be > 0");
    const auto& k = traj.keypoints();
    if (k.empty()) throw Error(ErrorCode::empty_trajectory, "trajectory has no keypoints");
    const double t0 = k.front().time, t1 = k.back().time;
    const double span = (t1 - t0) * fps;
    const auto n = static_cast<long long>(std::floor(span + 1e-9));
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(n) + 2);
    for (long long i = 0; i <= n; ++i) times.push_back(t0 + static_cast<double>(i) / fps);
    if (std::abs(static_cast<double>(n) - span) <= 1e-9)
        times.back() = t1;
    else
        times.push_back(t1);
    return times;
}

}  // namespace scirender
