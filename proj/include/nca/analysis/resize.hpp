#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "nca/core.hpp"

namespace nca {

/// Bilinear resampling with half-pixel centers and clamped borders.
inline Image resize_bilinear(const Image& src, std::size_t out_h, std::size_t out_w) {
    Image out(out_h, out_w);
    const double sy = static_cast<double>(src.height) / static_cast<double>(out_h);
    const double sx = static_cast<double>(src.width) / static_cast<double>(out_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                     static_cast<double>(src.height - 1));
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < out_w; ++x) {
            const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                         static_cast<double>(src.width - 1));
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < 3; ++c) {
                const double top = src.at(y0, x0, c) * (1 - wx) + src.at(y0, x1, c) * wx;
                const double bot = src.at(y1, x0, c) * (1 - wx) + src.at(y1, x1, c) * wx;
                out.at(y, x, c) = static_cast<float>(top * (1 - wy) + bot * wy);
            }
        }
    }
    return out;
}

/// Bilinear upsampling of a coarse scalar field to h x w (same convention).
inline std::vector<double> resize_field(const std::vector<double>& src, std::size_t sh, std::size_t sw,
                                        std::size_t h, std::size_t w) {
    std::vector<double> out(h * w);
    const double sy = static_cast<double>(sh) / static_cast<double>(h);
    const double sx = static_cast<double>(sw) / static_cast<double>(w);
    for (std::size_t y = 0; y < h; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(sh - 1));
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, sh - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < w; ++x) {
            const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(sw - 1));
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, sw - 1);
            const double wx = fx - static_cast<double>(x0);
            const double top = src[y0 * sw + x0] * (1 - wx) + src[y0 * sw + x1] * wx;
            const double bot = src[y1 * sw + x0] * (1 - wx) + src[y1 * sw + x1] * wx;
            out[y * w + x] = top * (1 - wy) + bot * wy;
        }
    }
    return out;
}

}  // namespace nca
