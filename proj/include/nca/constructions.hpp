#pragma once

// Hand-built rules with known closed-form dynamics. A pair of hidden units
// (+v, -v) followed by output weights (+a, -a) reproduces the linear map
// a * v.z exactly, since relu(u) - relu(-u) = u.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nca/core.hpp"
#include "nca/rng.hpp"

namespace nca::constructions {

/// Perception block offsets within z.
enum class Block : std::size_t { id = 0, grad_x = 1, grad_y = 2, lap = 3 };

/// dS_c = gain * z[block, c] for every channel c (D = 2C).
template <std::floating_point T = float>
RuleWeights<T> diagonal_linear(std::size_t channels, Block block, T gain, Variant v = Variant::noise) {
    auto w = RuleWeights<T>::zeros(channels, 2 * channels, v);
    const std::size_t col0 = static_cast<std::size_t>(block) * channels;
    for (std::size_t c = 0; c < channels; ++c) {
        w.w1_at(2 * c, col0 + c) = T(1);
        w.w1_at(2 * c + 1, col0 + c) = T(-1);
        w.w2_at(c, 2 * c) = gain;
        w.w2_at(c, 2 * c + 1) = -gain;
    }
    return w;
}

/// dS/dt = alpha * laplacian(S).
template <std::floating_point T = float>
RuleWeights<T> heat(std::size_t channels, T alpha) {
    return diagonal_linear<T>(channels, Block::lap, alpha);
}

/// dS/dt = -k S.
template <std::floating_point T = float>
RuleWeights<T> decay(std::size_t channels, T k) {
    return diagonal_linear<T>(channels, Block::id, -k);
}

/// dS/dt = c everywhere, independent of the state.
template <std::floating_point T = float>
RuleWeights<T> constant(std::size_t channels, T c) {
    auto w = RuleWeights<T>::zeros(channels, 1, Variant::noise);
    w.b1[0] = T(1);
    for (std::size_t ch = 0; ch < channels; ++ch) w.w2_at(ch, 0) = c;
    return w;
}

/// dS/dt = S - a per channel, quiescent at S = a (D = 2C, b1 = (-a, +a)).
template <std::floating_point T = float>
RuleWeights<T> shifted_identity(const std::vector<T>& a) {
    const std::size_t C = a.size();
    auto w = RuleWeights<T>::zeros(C, 2 * C, Variant::noise);
    for (std::size_t c = 0; c < C; ++c) {
        w.w1_at(2 * c, c) = T(1);
        w.w1_at(2 * c + 1, c) = T(-1);
        w.b1[2 * c] = -a[c];
        w.b1[2 * c + 1] = a[c];
        w.w2_at(c, 2 * c) = T(1);
        w.w2_at(c, 2 * c + 1) = T(-1);
    }
    return w;
}

/// Uniform random entries in [-scale, scale], keyed by `seed`.
template <std::floating_point T = float>
RuleWeights<T> random(std::size_t channels, std::size_t hidden, Variant v, std::uint64_t seed, double scale = 0.1) {
    auto w = RuleWeights<T>::zeros(channels, hidden, v);
    auto fill = [&](std::vector<T>& dst, std::uint64_t lane) {
        for (std::size_t i = 0; i < dst.size(); ++i)
            dst[i] = static_cast<T>(scale * (2.0 * rng::uniform(seed, i, lane, 0) - 1.0));
    };
    fill(w.w1, 1);
    fill(w.b1, 2);
    fill(w.w2, 3);
    return w;
}

/// random() plus a -k S term on D extra hidden units, so the state stays bounded
/// for small scales.
template <std::floating_point T = float>
RuleWeights<T> damped_random(std::size_t channels, std::size_t hidden, std::uint64_t seed, double scale, T k) {
    auto r = random<T>(channels, hidden, Variant::noise, seed, scale);
    auto w = RuleWeights<T>::zeros(channels, hidden + 2 * channels, Variant::noise);
    for (std::size_t h = 0; h < hidden; ++h) {
        for (std::size_t i = 0; i < r.input_width(); ++i) w.w1_at(h, i) = r.w1_at(h, i);
        w.b1[h] = r.b1[h];
        for (std::size_t c = 0; c < channels; ++c) w.w2_at(c, h) = r.w2_at(c, h);
    }
    for (std::size_t c = 0; c < channels; ++c) {
        w.w1_at(hidden + 2 * c, c) = T(1);
        w.w1_at(hidden + 2 * c + 1, c) = T(-1);
        w.w2_at(c, hidden + 2 * c) = -k;
        w.w2_at(c, hidden + 2 * c + 1) = k;
    }
    return w;
}

}  // namespace nca::constructions
