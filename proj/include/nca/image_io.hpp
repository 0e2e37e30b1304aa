#pragma once

// 8-bit RGB PNG encoding/decoding through libpng's simplified API.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "nca/core.hpp"
#include "nca/io.hpp"

namespace nca::io {

/// round(255 * clamp(v, 0, 1)), halves rounded up.
inline std::uint8_t to_byte(float v) {
    const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::floor(255.0 * c + 0.5));
}

inline std::vector<std::uint8_t> to_rgb8(const Image& img) {
    std::vector<std::uint8_t> px(img.rgb.size());
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = to_byte(img.rgb[i]);
    return px;
}

/// RGBA8 with opaque alpha, as streamed to viewers.
inline std::vector<std::uint8_t> to_rgba8(const Image& img) {
    std::vector<std::uint8_t> px(img.height * img.width * 4);
    for (std::size_t i = 0; i < img.height * img.width; ++i) {
        for (std::size_t c = 0; c < 3; ++c) px[4 * i + c] = to_byte(img.rgb[3 * i + c]);
        px[4 * i + 3] = 255;
    }
    return px;
}

inline std::vector<std::uint8_t> encode_png(const Image& img) {
    const auto px = to_rgb8(img);
    png_image pi;
    std::memset(&pi, 0, sizeof(pi));
    pi.version = PNG_IMAGE_VERSION;
    pi.width = static_cast<png_uint_32>(img.width);
    pi.height = static_cast<png_uint_32>(img.height);
    pi.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&pi, nullptr, &size, 0, px.data(), 0, nullptr))
        throw Error(ErrorKind::io, std::string("png: ") + pi.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&pi, out.data(), &size, 0, px.data(), 0, nullptr))
        throw Error(ErrorKind::io, std::string("png: ") + pi.message);
    out.resize(size);
    return out;
}

inline void save_image(const Image& img, const std::string& path) { detail::write_file(path, encode_png(img)); }

/// Decodes any PNG to float RGB in [0, 1] (value / 255).
inline Image decode_png(const std::vector<std::uint8_t>& bytes) {
    png_image pi;
    std::memset(&pi, 0, sizeof(pi));
    pi.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&pi, bytes.data(), bytes.size()))
        throw Error(ErrorKind::format, std::string("png: ") + pi.message);
    pi.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(pi));
    if (!png_image_finish_read(&pi, nullptr, px.data(), 0, nullptr)) {
        png_image_free(&pi);
        throw Error(ErrorKind::format, std::string("png: ") + pi.message);
    }
    Image img(pi.height, pi.width);
    for (std::size_t i = 0; i < px.size(); ++i) img.rgb[i] = static_cast<float>(px[i]) / 255.f;
    return img;
}

inline Image load_image(const std::string& path) { return decode_png(detail::read_file(path)); }

}  // namespace nca::io
