#include <png.h>

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "scirender/error.hpp"
#include "scirender/io.hpp"

namespace scirender {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::io_error, "failed reading '" + path + "'");
    return std::move(ss).str();
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io_error, "failed writing '" + path + "'");
}

// --------------------------------------------------------------------- PNG

namespace {

void check_dims(long long w, long long h, int channels) {
    if (w <= 0 || h <= 0) throw Error(ErrorCode::invalid_image, "image dimensions must be positive");
    if (w > (1 << 24) || h > (1 << 24) || w * h > (1LL << 31) / channels)
        throw Error(ErrorCode::invalid_image, "image dimensions overflow");
}

}  // namespace

Image8 decode_png(std::string_view bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw Error(ErrorCode::parse_error, std::string("invalid PNG: ") + image.message);
    const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    image.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    const int channels = alpha ? 4 : 3;
    try {
        check_dims(image.width, image.height, channels);
    } catch (...) {
        png_image_free(&image);
        throw;
    }
    Image8 out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.channels = channels;
    out.data.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorCode::parse_error, "invalid PNG: " + msg);
    }
    return out;
}

Image8 read_png(const std::string& path) { return decode_png(read_file(path)); }

std::string encode_png(const Image8& img) {
    if (img.channels != 3 && img.channels != 4)
        throw Error(ErrorCode::invalid_image, "PNG output needs 3 or 4 channels");
    check_dims(img.width, img.height, img.channels);
    if (img.data.size() != static_cast<std::size_t>(img.width) * img.height * img.channels)
        throw Error(ErrorCode::invalid_image, "pixel buffer size does not match dimensions");
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 4 ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data.data(), 0, nullptr))
        throw Error(ErrorCode::io_error, std::string("PNG encode failed: ") + image.message);
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data.data(), 0, nullptr))
        throw Error(ErrorCode::io_error, std::string("PNG encode failed: ") + image.message);
    out.resize(size);
    return out;
}

void write_png(const Image8& img, const std::string& path) { write_file(path, encode_png(img)); }

Image load_texture_png(const std::string& path) { return decode_srgb(read_png(path)); }

// --------------------------------------------------------------------- PFM

namespace {

void put_le(std::string& out, float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

float get_le(const unsigned char* p) {
    const std::uint32_t u = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

float get_be(const unsigned char* p) {
    const std::uint32_t u = (static_cast<std::uint32_t>(p[0]) << 24) | (p[1] << 16) | (p[2] << 8) | p[3];
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

}  // namespace

std::string encode_pfm(const FloatImage& img) {
    check_dims(img.width, img.height, 1);
    if (img.data.size() != static_cast<std::size_t>(img.width) * img.height)
        throw Error(ErrorCode::invalid_image, "depth buffer size does not match dimensions");
    std::string out = "Pf\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n-1.0\n";
    out.reserve(out.size() + img.data.size() * 4);
    for (int y = img.height - 1; y >= 0; --y)
        for (int x = 0; x < img.width; ++x) put_le(out, img.data[static_cast<std::size_t>(y) * img.width + x]);
    return out;
}

void write_pfm(const FloatImage& img, const std::string& path) { write_file(path, encode_pfm(img)); }

FloatImage decode_pfm(std::string_view bytes) {
    std::size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw Error(ErrorCode::parse_error, "truncated PFM header");
        return std::string(bytes.substr(start, pos - start));
    };
    const std::string magic = token();
    if (magic != "Pf") throw Error(ErrorCode::unsupported, "only grayscale 'Pf' PFM files are supported");
    long long w = 0, h = 0;
    double scale = 0;
    try {
        w = std::stoll(token());
        h = std::stoll(token());
        scale = std::stod(token());
    } catch (const Error&) {
        throw;
    } catch (...) {
        throw Error(ErrorCode::parse_error, "malformed PFM header");
    }
    check_dims(w, h, 4);
    if (scale == 0 || !std::isfinite(scale)) throw Error(ErrorCode::parse_error, "PFM scale must be nonzero");
    if (pos >= bytes.size()) throw Error(ErrorCode::parse_error, "truncated PFM header");
    ++pos;  // single whitespace byte before the payload
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - pos < n * 4) throw Error(ErrorCode::parse_error, "truncated PFM payload");
    FloatImage img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.data.resize(n);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    for (long long row = 0; row < h; ++row) {
        const long long y = h - 1 - row;
        for (long long x = 0; x < w; ++x) {
            const unsigned char* q = p + 4 * (row * w + x);
            img.data[static_cast<std::size_t>(y * w + x)] = scale < 0 ? get_le(q) : get_be(q);
        }
    }
    return img;
}

FloatImage read_pfm(const std::string& path) { return decode_pfm(read_file(path)); }

}  // namespace scirender
