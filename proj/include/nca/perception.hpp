#pragma once

// Perception stage: depthwise 3x3 cross-correlation of the state with the
// identity, Sobel and nine-point Laplacian stencils, rescaled by the local
// cell size so that the blocks estimate S, dS/dx, dS/dy and the Laplacian.
//
// Output layout per cell: [id (C) | grad_x (C) | grad_y (C) | lap (C) | pe (0 or 2)].

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "nca/core.hpp"
#include "nca/parallel.hpp"

namespace nca {

using Stencil = std::array<std::array<double, 3>, 3>;  // [row = dy + 1][col = dx + 1]

struct FilterBank {
    static constexpr Stencil identity{{{0, 0, 0}, {0, 1, 0}, {0, 0, 0}}};
    static constexpr Stencil sobel_x{{{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}}};
    static constexpr Stencil sobel_y{{{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}}};
    static constexpr Stencil laplacian{{{1, 2, 1}, {2, -12, 2}, {1, 2, 1}}};
    static constexpr Stencil laplacian_x{{{0.5, 0, 0.5}, {2, -6, 2}, {0.5, 0, 0.5}}};
    static constexpr Stencil laplacian_y{{{0.5, 2, 0.5}, {0, -6, 0}, {0.5, 2, 0.5}}};
};

/// H x W x K perception stack.
template <std::floating_point T = float>
struct PerceptionField {
    std::size_t height = 0, width = 0, depth = 0;
    std::size_t channels = 0;  // C; depth = 4C (+2 with positional encoding)
    std::vector<T> data;

    std::span<const T> cell(std::size_t y, std::size_t x) const {
        return {data.data() + (y * width + x) * depth, depth};
    }
    std::span<T> cell(std::size_t y, std::size_t x) { return {data.data() + (y * width + x) * depth, depth}; }

    /// Block b (0 id, 1 grad_x, 2 grad_y, 3 lap) value for channel ch.
    T block(std::size_t y, std::size_t x, std::size_t b, std::size_t ch) const {
        return data[(y * width + x) * depth + b * channels + ch];
    }
};

namespace detail {

inline std::size_t wrap_index(std::ptrdiff_t i, std::size_t n, Padding p) {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    if (p == Padding::circular) return static_cast<std::size_t>(((i % sn) + sn) % sn);
    return static_cast<std::size_t>(i < 0 ? 0 : (i >= sn ? sn - 1 : i));
}

}  // namespace detail

/// Raw (unscaled) response of one stencil at one cell and channel.
template <std::floating_point T>
double correlate_at(const CellGrid<T>& g, Padding pad, const Stencil& k, std::size_t y, std::size_t x,
                    std::size_t ch) {
    double acc = 0;
    for (int dy = -1; dy <= 1; ++dy) {
        const std::size_t yy = detail::wrap_index(static_cast<std::ptrdiff_t>(y) + dy, g.height(), pad);
        for (int dx = -1; dx <= 1; ++dx) {
            const std::size_t xx = detail::wrap_index(static_cast<std::ptrdiff_t>(x) + dx, g.width(), pad);
            acc += k[dy + 1][dx + 1] * static_cast<double>(g.at(yy, xx, ch));
        }
    }
    return acc;
}

/// Writes the perception vectors of row y into `out` (W * depth values).
template <std::floating_point T>
void perceive_row(const CellGrid<T>& g, const RuleWeights<T>& w, const Discretization& disc, std::size_t y,
                  std::span<T> out) {
    const std::size_t H = g.height(), W = g.width(), C = g.channels();
    const std::size_t K = w.input_width();
    const Padding pad = w.padding;
    const double sd = static_cast<double>(w.sobel_divisor);
    const double ld = static_cast<double>(w.laplacian_divisor);
    const auto Y = static_cast<std::ptrdiff_t>(y);
    const T* rows[3] = {&g.data()[detail::wrap_index(Y - 1, H, pad) * W * C], &g.data()[y * W * C],
                        &g.data()[detail::wrap_index(Y + 1, H, pad) * W * C]};

    for (std::size_t x = 0; x < W; ++x) {
        const auto X = static_cast<std::ptrdiff_t>(x);
        const std::size_t cols[3] = {detail::wrap_index(X - 1, W, pad) * C, x * C,
                                     detail::wrap_index(X + 1, W, pad) * C};
        const double dx = disc.dx.at(y, x), dy = disc.dy.at(y, x);
        const double gx_scale = sd * dx, gy_scale = sd * dy;
        const double lx_scale = ld * dx * dx, ly_scale = ld * dy * dy;
        T* z = out.data() + x * K;
        for (std::size_t c = 0; c < C; ++c) {
            double v[3][3];
            for (int r = 0; r < 3; ++r)
                for (int q = 0; q < 3; ++q) v[r][q] = static_cast<double>(rows[r][cols[q] + c]);
            // Sobel and Laplacian responses, expanded from the FilterBank stencils.
            const double sx = (v[0][2] - v[0][0]) + 2.0 * (v[1][2] - v[1][0]) + (v[2][2] - v[2][0]);
            const double sy = (v[2][0] - v[0][0]) + 2.0 * (v[2][1] - v[0][1]) + (v[2][2] - v[0][2]);
            const double corners = 0.5 * (v[0][0] + v[0][2] + v[2][0] + v[2][2]);
            const double lx = corners + 2.0 * (v[1][0] + v[1][2]) - 6.0 * v[1][1];
            const double ly = corners + 2.0 * (v[0][1] + v[2][1]) - 6.0 * v[1][1];
            z[c] = static_cast<T>(v[1][1]);
            z[C + c] = static_cast<T>(sx / gx_scale);
            z[2 * C + c] = static_cast<T>(sy / gy_scale);
            z[3 * C + c] = static_cast<T>(lx / lx_scale + ly / ly_scale);
        }
        if (w.variant == Variant::pe) {
            z[4 * C] = static_cast<T>(static_cast<double>(x) / static_cast<double>(W));
            z[4 * C + 1] = static_cast<T>(static_cast<double>(y) / static_cast<double>(H));
        }
    }
}

template <std::floating_point T>
void check_perception_inputs(const CellGrid<T>& g, const RuleWeights<T>& w, const Discretization& disc) {
    if (g.channels() != w.channels)
        throw Error(ErrorKind::shape, "grid has " + std::to_string(g.channels()) + " channels, weights expect " +
                                          std::to_string(w.channels));
    if (!disc.dx.matches(g.height(), g.width()) || !disc.dy.matches(g.height(), g.width()))
        throw Error(ErrorKind::shape, "cell-size field shape does not match the grid");
}

/// Full perception field. Cells are independent, so any thread count yields
/// identical output.
template <std::floating_point T>
PerceptionField<T> perceive(const CellGrid<T>& g, const RuleWeights<T>& w, const Discretization& disc,
                            std::size_t threads = 1) {
    check_perception_inputs(g, w, disc);
    PerceptionField<T> z;
    z.height = g.height();
    z.width = g.width();
    z.channels = g.channels();
    z.depth = w.input_width();
    z.data.assign(z.height * z.width * z.depth, T(0));
    const std::size_t row = z.width * z.depth;
    parallel_for(z.height, threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t y = b; y < e; ++y)
            perceive_row(g, w, disc, y, std::span<T>(z.data.data() + y * row, row));
    });
    return z;
}

}  // namespace nca
