#include "scirender/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "scirender/error.hpp"
#include "scirender/simd.hpp"

namespace scirender {

Image::Image(int w, int h, const Vec4& fill) : width(w), height(h) {
    pixels.resize(static_cast<std::size_t>(w) * h * 4);
    for (std::size_t i = 0; i < pixels.size(); i += 4) {
        pixels[i] = static_cast<float>(fill.x);
        pixels[i + 1] = static_cast<float>(fill.y);
        pixels[i + 2] = static_cast<float>(fill.z);
        pixels[i + 3] = static_cast<float>(fill.w);
    }
}

namespace {

int wrap(long long i, int n) {
    const long long m = i % n;
    return static_cast<int>(m < 0 ? m + n : m);
}

}  // namespace

Vec4 sample_texture(const Image& img, const Vec2& uv) {
    if (img.empty()) throw Error(ErrorCode::invalid_image, "cannot sample an empty image");
    // Continuous texel coordinates measured from the bottom-left corner.
    const double x = uv.x * img.width - 0.5;
    const double y = uv.y * img.height - 0.5;
    const double fx0 = std::floor(x), fy0 = std::floor(y);
    const double fx = x - fx0, fy = y - fy0;
    const long long ix = static_cast<long long>(fx0), iy = static_cast<long long>(fy0);
    const int x0 = wrap(ix, img.width), x1 = wrap(ix + 1, img.width);
    // Bottom-up row index -> top-down storage row.
    const int r0 = img.height - 1 - wrap(iy, img.height);
    const int r1 = img.height - 1 - wrap(iy + 1, img.height);
    const Vec4 c00 = img.at(x0, r0), c10 = img.at(x1, r0);
    const Vec4 c01 = img.at(x0, r1), c11 = img.at(x1, r1);
    const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
    const double w01 = (1 - fx) * fy, w11 = fx * fy;
    return c00 * w00 + c10 * w10 + c01 * w01 + c11 * w11;
}

Image8 encode_srgb(const Image& img, int channels) {
    Image8 out;
    out.width = img.width;
    out.height = img.height;
    out.channels = channels;
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    std::vector<double> rgb(n * 3);
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) rgb[i * 3 + c] = img.pixels[i * 4 + c];
    std::vector<std::uint8_t> encoded(n * 3);
    simd::encode_srgb8(rgb, encoded);
    out.data.resize(n * channels);
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) out.data[i * channels + c] = encoded[i * 3 + c];
        if (channels == 4) {
            const double a = std::clamp(static_cast<double>(img.pixels[i * 4 + 3]), 0.0, 1.0);
            out.data[i * 4 + 3] = static_cast<std::uint8_t>(std::round(a * 255.0));
        }
    }
    return out;
}

Image decode_srgb(const Image8& img) {
    Image out(img.width, img.height);
    std::array<float, 256> lut{};
    for (int i = 0; i < 256; ++i) lut[i] = static_cast<float>(simd::srgb_eotf(i / 255.0));
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* p = &img.data[i * img.channels];
        out.pixels[i * 4] = lut[p[0]];
        out.pixels[i * 4 + 1] = lut[p[1]];
        out.pixels[i * 4 + 2] = lut[p[2]];
        out.pixels[i * 4 + 3] = img.channels == 4 ? p[3] / 255.0f : 1.0f;
    }
    return out;
}

}  // namespace scirender
