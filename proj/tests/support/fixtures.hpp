#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "scirender/geometry.hpp"
#include "scirender/math.hpp"

namespace fixtures {

using scirender::Vec3;

inline std::vector<Vec3> fibonacci_sphere(std::size_t n, double radius = 1.0) {
    std::vector<Vec3> pts;
    const double golden = scirender::kPi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        const double r = std::sqrt(1.0 - z * z);
        const double a = golden * static_cast<double>(i);
        pts.push_back(Vec3{r * std::cos(a), r * std::sin(a), z} * radius);
    }
    return pts;
}

/// n x n grid on z = 0 centered at the origin.
inline std::vector<Vec3> grid(int n, double spacing) {
    std::vector<Vec3> pts;
    const double off = 0.5 * (n - 1) * spacing;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) pts.push_back({i * spacing - off, j * spacing - off, 0.0});
    return pts;
}

/// Triangulated n x n vertex grid on z = 0.
inline scirender::TriMesh grid_mesh(int n, double spacing) {
    scirender::TriMesh m;
    m.vertices = grid(n, spacing);
    for (int j = 0; j + 1 < n; ++j) {
        for (int i = 0; i + 1 < n; ++i) {
            const auto a = static_cast<std::uint32_t>(j * n + i);
            const auto b = a + 1, c = a + static_cast<std::uint32_t>(n), d = c + 1;
            m.faces.push_back({a, b, d});
            m.faces.push_back({a, d, c});
        }
    }
    return m;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (;;) {
        const Vec3 v{g(rng), g(rng), g(rng)};
        const double l = scirender::length(v);
        if (l > 1e-6) return v / l;
    }
}

inline scirender::Quat random_quat(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    scirender::Quat q{g(rng), g(rng), g(rng), g(rng)};
    const double n = q.norm();
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

/// Random triangle soup mesh, shapes ranging from regular to slivers.
inline scirender::TriMesh random_soup(std::size_t faces, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    scirender::TriMesh m;
    for (std::size_t f = 0; f < faces; ++f) {
        const Vec3 c{u(rng) * 5, u(rng) * 5, u(rng) * 5};
        Vec3 p[3];
        for (auto& v : p) v = c + Vec3{u(rng), u(rng), u(rng)};
        if (f % 5 == 4) p[2] = p[0] * 0.5 + p[1] * 0.5 + Vec3{0, 0, 1e-3};
        const auto base = static_cast<std::uint32_t>(m.vertices.size());
        for (const auto& v : p) m.vertices.push_back(v);
        m.faces.push_back({base, base + 1, base + 2});
    }
    return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("scirender_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fixtures
