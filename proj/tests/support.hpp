#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <random>

#include "nca/core.hpp"

namespace nca::test {

/// Grid filled with U[lo, hi] values from a std::mt19937_64 stream.
inline Grid random_grid(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed, float lo = -1.f,
                        float hi = 1.f) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    Grid g(h, w, c);
    for (auto& v : g.data()) v = dist(gen);
    return g;
}

/// Distance in units in the last place between two floats of the same sign.
inline std::int64_t ulp_distance(float a, float b) {
    if (a == b) return 0;
    auto key = [](float f) {
        std::int32_t i;
        std::memcpy(&i, &f, sizeof i);
        return i < 0 ? std::int64_t{std::numeric_limits<std::int32_t>::min()} - i : std::int64_t{i};
    };
    return std::llabs(key(a) - key(b));
}

/// Cyclic translation by (sy, sx).
inline Grid shift(const Grid& g, std::size_t sy, std::size_t sx) {
    Grid out(g.height(), g.width(), g.channels(), g.time());
    for (std::size_t y = 0; y < g.height(); ++y)
        for (std::size_t x = 0; x < g.width(); ++x)
            for (std::size_t c = 0; c < g.channels(); ++c)
                out.at((y + sy) % g.height(), (x + sx) % g.width(), c) = g.at(y, x, c);
    return out;
}

}  // namespace nca::test
