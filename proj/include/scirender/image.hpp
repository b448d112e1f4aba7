#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "scirender/math.hpp"

namespace scirender {

/// Linear-light RGBA float image; row 0 is the top row.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;  // width * height * 4

    Image() = default;
    Image(int w, int h, const Vec4& fill = {0, 0, 0, 1});

    bool empty() const { return width <= 0 || height <= 0; }
    Vec4 at(int x, int y) const {
        const float* p = &pixels[(static_cast<std::size_t>(y) * width + x) * 4];
        return {p[0], p[1], p[2], p[3]};
    }
    void set(int x, int y, const Vec4& c) {
        float* p = &pixels[(static_cast<std::size_t>(y) * width + x) * 4];
        p[0] = static_cast<float>(c.x);
        p[1] = static_cast<float>(c.y);
        p[2] = static_cast<float>(c.z);
        p[3] = static_cast<float>(c.w);
    }
    bool operator==(const Image&) const = default;
};

/// Bilinear lookup with repeat wrapping; v = 0 is the bottom row of the image.
/// Throws Error(invalid_image) for an empty image.
Vec4 sample_texture(const Image& img, const Vec2& uv);

/// 8-bit image as stored in PNG files (sRGB-encoded color, linear alpha).
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 4;  // 3 or 4
    std::vector<std::uint8_t> data;
    bool operator==(const Image8&) const = default;
};

Image8 encode_srgb(const Image& img, int channels = 4);
Image decode_srgb(const Image8& img);

}  // namespace scirender
