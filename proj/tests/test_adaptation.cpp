#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "nca/adaptation.hpp"
#include "nca/constructions.hpp"
#include "support.hpp"

using namespace nca;

namespace {

PerceptionField<float> random_field(std::size_t h, std::size_t w, std::size_t c, std::size_t depth,
                                    std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<float> dist(-2.f, 2.f);
    PerceptionField<float> z;
    z.height = h;
    z.width = w;
    z.channels = c;
    z.depth = depth;
    z.data.resize(h * w * depth);
    for (auto& v : z.data) v = dist(gen);
    return z;
}

// Direct evaluation of W2 relu(W1 z + b1) in double.
std::vector<double> direct(const Weights& w, std::span<const float> z) {
    const std::size_t K = w.input_width();
    std::vector<double> h(w.hidden), out(w.channels, 0.0);
    for (std::size_t r = 0; r < w.hidden; ++r) {
        double a = w.b1[r];
        for (std::size_t k = 0; k < K; ++k) a += static_cast<double>(w.w1[r * K + k]) * z[k];
        h[r] = a > 0 ? a : 0;
    }
    for (std::size_t c = 0; c < w.channels; ++c)
        for (std::size_t r = 0; r < w.hidden; ++r) out[c] += static_cast<double>(w.w2[c * w.hidden + r]) * h[r];
    return out;
}

}  // namespace

TEST_CASE("zero output layer gives a zero update", "[adaptation]") {
    auto w = constructions::random<float>(4, 8, Variant::noise, 3);
    std::fill(w.w2.begin(), w.w2.end(), 0.f);
    const auto z = random_field(5, 6, 4, 16, 1);
    const auto ds = residual(z, w);
    for (float v : ds.data()) REQUIRE(v == 0.f);
}

TEST_CASE("paired rectifiers reproduce a linear map on the laplacian slot", "[adaptation][oracle]") {
    const float alpha = 0.37f;
    const auto w = constructions::heat<float>(3, alpha);
    const auto z = random_field(6, 7, 3, 12, 2);
    const auto ds = residual(z, w);
    for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 7; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                const float expected = alpha * z.block(y, x, 3, c);  // direct multiplication
                REQUIRE(test::ulp_distance(ds.at(y, x, c), expected) <= 4);
            }
}

TEST_CASE("bias-only rule gives a constant update", "[adaptation][oracle]") {
    const auto w = constructions::constant<float>(3, 0.625f);
    const auto z = random_field(4, 4, 3, 12, 3);
    const auto ds = residual(z, w);
    for (float v : ds.data()) REQUIRE(v == 0.625f);
}

TEST_CASE("residual matches a direct evaluation for random weights", "[adaptation][oracle]") {
    const auto w = constructions::random<float>(5, 24, Variant::pe, 9, 0.5);
    const auto z = random_field(4, 5, 5, w.input_width(), 4);
    const auto ds = residual(z, w);
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 5; ++x) {
            const auto ref = direct(w, z.cell(y, x));
            for (std::size_t c = 0; c < 5; ++c) REQUIRE(ds.at(y, x, c) == Catch::Approx(ref[c]).margin(1e-5));
        }
}

TEST_CASE("residual is per-cell local", "[adaptation][property]") {
    const auto w = constructions::random<float>(3, 16, Variant::noise, 1, 0.5);
    auto z = random_field(5, 5, 3, 12, 5);
    const auto before = residual(z, w);
    for (std::size_t k = 0; k < 12; ++k) z.cell(2, 3)[k] += 0.5f;
    const auto after = residual(z, w);
    for (std::size_t y = 0; y < 5; ++y)
        for (std::size_t x = 0; x < 5; ++x) {
            if (y == 2 && x == 3) continue;
            for (std::size_t c = 0; c < 3; ++c) REQUIRE(after.at(y, x, c) == before.at(y, x, c));
        }
}

TEST_CASE("residual is positively homogeneous without bias", "[adaptation][property]") {
    auto w = constructions::random<float>(3, 16, Variant::noise, 2, 0.5);
    std::fill(w.b1.begin(), w.b1.end(), 0.f);
    const auto z = random_field(4, 4, 3, 12, 6);
    for (float s : {0.f, 0.5f, 2.f, 4.f}) {
        auto zs = z;
        for (auto& v : zs.data) v *= s;
        const auto a = residual(z, w), b = residual(zs, w);
        for (std::size_t i = 0; i < a.data().size(); ++i) REQUIRE(b.data()[i] == Catch::Approx(s * a.data()[i]).margin(1e-5));
    }
}

TEST_CASE("residual rejects a width mismatch", "[adaptation]") {
    const auto w = constructions::random<float>(3, 8, Variant::noise, 0);
    const auto z = random_field(4, 4, 3, 14, 0);
    REQUIRE_THROWS_AS(residual(z, w), Error);
}
