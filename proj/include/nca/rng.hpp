#pragma once

// Counter-based randomness: every value is a pure function of (seed, x, y,
// lane), so results do not depend on evaluation order or thread count.

#include <cstdint>

namespace nca::rng {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Key layout: y in bits 44..63, x in bits 24..43, lane in bits 0..23, XORed
/// with a mixed form of the stream seed. Lane is the channel for seeds and
/// the step index (mod 2^24) for update masks.
constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t x, std::uint64_t y,
                            std::uint64_t lane) noexcept {
    const std::uint64_t packed =
        ((y & 0xFFFFFull) << 44) | ((x & 0xFFFFFull) << 24) | (lane & 0xFFFFFFull);
    return packed ^ splitmix64(seed + 0x9E3779B97F4A7C15ull);
}

constexpr std::uint64_t bits(std::uint64_t seed, std::uint64_t x, std::uint64_t y,
                             std::uint64_t lane) noexcept {
    return splitmix64(key(seed, x, y, lane));
}

/// Uniform in [0, 1) from the top 53 bits.
constexpr double uniform(std::uint64_t seed, std::uint64_t x, std::uint64_t y,
                         std::uint64_t lane) noexcept {
    return static_cast<double>(bits(seed, x, y, lane) >> 11) * 0x1.0p-53;
}

/// Bernoulli(1/2) coin.
constexpr bool coin(std::uint64_t seed, std::uint64_t x, std::uint64_t y,
                    std::uint64_t lane) noexcept {
    return uniform(seed, x, y, lane) < 0.5;
}

}  // namespace nca::rng
