#include "scirender/pc_utils.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "scirender/error.hpp"
#include "scirender/knn.hpp"

namespace scirender {

NormalEstimate estimate_normals_from_pointcloud(const std::vector<Vec3>& points, int k,
                                                const std::optional<Vec3>& orientation_reference) {
    if (k < 3) throw Error(ErrorCode::invalid_argument, "k must be >= 3");
    if (points.size() < static_cast<std::size_t>(k))
        throw Error(ErrorCode::insufficient_points, "normal estimation needs at least k = " +
                                                        std::to_string(k) + " points, got " +
                                                        std::to_string(points.size()));
    const KdTree tree(points);
    NormalEstimate out;
    out.normals.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto nbrs = tree.knn(points[i], static_cast<std::size_t>(k));
        Vec3 mean;
        for (const Neighbor& nb : nbrs) mean += points[nb.index];
        mean = mean / static_cast<double>(nbrs.size());
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (const Neighbor& nb : nbrs) {
            const Vec3 d = points[nb.index] - mean;
            const Eigen::Vector3d e(d.x, d.y, d.z);
            cov += e * e.transpose();
        }
        cov /= static_cast<double>(nbrs.size());
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
        const Eigen::Vector3d ev = es.eigenvalues();
        const Eigen::Vector3d v = es.eigenvectors().col(0);
        Vec3 n = normalize(Vec3{v.x(), v.y(), v.z()});
        if (std::abs(ev(1) - ev(0)) <= 1e-9 * std::max(1.0, ev(2))) out.degenerate.push_back(static_cast<std::uint32_t>(i));
        if (orientation_reference && dot(n, *orientation_reference - points[i]) < 0.0) n = -n;
        out.normals[i] = n;
    }
    return out;
}

std::vector<Vec4> approximate_colors_from_camera(const std::vector<Vec3>& points,
                                                 const std::vector<Vec3>& normals,
                                                 const Vec3& camera_position,
                                                 const std::vector<Vec3>& front_colors,
                                                 const Vec3& back_color, double back_alpha) {
    if (normals.size() != points.size())
        throw Error(ErrorCode::bind_error, "normals must have one entry per point");
    if (front_colors.size() != 1 && front_colors.size() != points.size())
        throw Error(ErrorCode::bind_error, "front colors must have 1 or " +
                                               std::to_string(points.size()) + " entries");
    std::vector<Vec4> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (dot(normals[i], camera_position - points[i]) < 0.0)
            out[i] = Vec4(back_color, back_alpha);
        else
            out[i] = Vec4(front_colors.size() == 1 ? front_colors[0] : front_colors[i], 1.0);
    }
    return out;
}

}  // namespace scirender
