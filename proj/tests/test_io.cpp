#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <random>
#include <span>
#include <sstream>

#include "nca/constructions.hpp"
#include "nca/image_io.hpp"
#include "nca/io.hpp"
#include "support.hpp"

using namespace nca;

namespace {

Weights random_weights(std::mt19937_64& gen) {
    std::uniform_int_distribution<int> dim(1, 20), var(0, 2);
    const auto v = static_cast<Variant>(var(gen));
    auto w = constructions::random<float>(static_cast<std::size_t>(dim(gen)) + 2, static_cast<std::size_t>(dim(gen)),
                                          v, gen(), 10.0);
    w.sobel_divisor = std::uniform_real_distribution<float>(0.5f, 16.f)(gen);
    w.laplacian_divisor = std::uniform_real_distribution<float>(0.5f, 16.f)(gen);
    return w;
}

bool same_bits(std::span<const float> a, std::span<const float> b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("nca_test_" + name);
}

}  // namespace

TEST_CASE("NCAW payload size", "[io]") {
    const auto bytes = io::encode_weights(Weights::zeros(12, 96, Variant::noise));
    REQUIRE(bytes.size() == io::weights_header_size + 4 * (96 * 48 + 96 + 12 * 96));
    REQUIRE(std::memcmp(bytes.data(), "NCAW", 4) == 0);
    REQUIRE(bytes[4] == 1);
    REQUIRE(bytes[8] == 12);
    REQUIRE(bytes[12] == 96);
    REQUIRE(bytes[16] == 2);
    REQUIRE(bytes[17] == 0);
    for (std::size_t i = 26; i < 42; ++i) REQUIRE(bytes[i] == 0);
}

TEST_CASE("NCAW fields are little-endian", "[io]") {
    auto w = Weights::zeros(3, 1, Variant::pe);
    w.w1[0] = 1.0f;  // 0x3f800000
    const auto bytes = io::encode_weights(w);
    REQUIRE(bytes[17] == 1);
    const std::size_t at = io::weights_header_size;
    REQUIRE(bytes[at] == 0x00);
    REQUIRE(bytes[at + 2] == 0x80);
    REQUIRE(bytes[at + 3] == 0x3f);
    // sobel_divisor 8.0f = 0x41000000
    REQUIRE(bytes[18 + 3] == 0x41);
}

TEST_CASE("NCAW round trip is bit-identical", "[io][property]") {
    std::mt19937_64 gen(123);
    for (int i = 0; i < 100; ++i) {
        const Weights w = random_weights(gen);
        std::stringstream buf;
        io::save_weights(w, buf);
        const Weights back = io::load_weights(buf);
        REQUIRE(back.channels == w.channels);
        REQUIRE(back.hidden == w.hidden);
        REQUIRE(back.variant == w.variant);
        REQUIRE(back.padding == w.padding);
        REQUIRE(std::bit_cast<std::uint32_t>(w.sobel_divisor) == std::bit_cast<std::uint32_t>(back.sobel_divisor));
        REQUIRE(std::bit_cast<std::uint32_t>(w.laplacian_divisor) == std::bit_cast<std::uint32_t>(back.laplacian_divisor));
        REQUIRE(same_bits(w.w1, back.w1));
        REQUIRE(same_bits(w.b1, back.b1));
        REQUIRE(same_bits(w.w2, back.w2));
        REQUIRE(io::encode_weights(back) == io::encode_weights(w));
    }
}

TEST_CASE("NCAW decoding errors", "[io][errors]") {
    auto bytes = io::encode_weights(Weights::zeros(3, 4, Variant::noise));
    auto bad = bytes;
    std::memcpy(bad.data(), "XXXX", 4);
    REQUIRE_THROWS_WITH(io::decode_weights(bad), Catch::Matchers::ContainsSubstring("magic"));
    bad = bytes;
    bad[4] = 2;
    REQUIRE_THROWS_WITH(io::decode_weights(bad), Catch::Matchers::ContainsSubstring("version"));
    bad = bytes;
    bad.pop_back();
    REQUIRE_THROWS_WITH(io::decode_weights(bad), Catch::Matchers::ContainsSubstring("truncated"));
    REQUIRE_THROWS_AS(io::decode_weights(std::vector<std::uint8_t>(10, 0)), Error);
    bad = bytes;
    bad[17] = 1;  // replicate padding on a noise rule
    REQUIRE_THROWS_AS(io::decode_weights(bad), Error);
    bad = bytes;
    bad[io::weights_header_size + 3] = 0x7f;  // 0x7f800000 in W1[0]: +inf
    bad[io::weights_header_size + 2] = 0x80;
    REQUIRE_THROWS_WITH(io::decode_weights(bad), Catch::Matchers::ContainsSubstring("non-finite"));
    bad = bytes;
    bad[30] = 7;  // reserved bytes are ignored on read
    REQUIRE(io::decode_weights(bad) == Weights::zeros(3, 4, Variant::noise));
}

TEST_CASE("state snapshot round trip", "[io][property]") {
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<std::size_t> dim(3, 20);
    for (int i = 0; i < 100; ++i) {
        Grid g = test::random_grid(dim(gen), dim(gen), dim(gen), gen());
        g.set_time(std::uniform_real_distribution<double>(0, 1000)(gen));
        const auto bytes = io::encode_state(g);
        REQUIRE(bytes.size() == io::state_header_size + 4 * g.data().size());
        const Grid back = io::decode_state(bytes);
        REQUIRE(back.height() == g.height());
        REQUIRE(back.width() == g.width());
        REQUIRE(back.channels() == g.channels());
        REQUIRE(std::bit_cast<std::uint64_t>(back.time()) == std::bit_cast<std::uint64_t>(g.time()));
        REQUIRE(same_bits(back.data(), g.data()));
    }
}

TEST_CASE("state snapshot errors", "[io][errors]") {
    const Grid g = test::random_grid(4, 5, 6, 1);
    auto bytes = io::encode_state(g);
    bytes.resize(bytes.size() - 3);
    REQUIRE_THROWS_WITH(io::decode_state(bytes), Catch::Matchers::ContainsSubstring("truncated"));
    REQUIRE_THROWS_WITH(io::decode_state(io::encode_weights(Weights::zeros(3, 1, Variant::noise))),
                        Catch::Matchers::ContainsSubstring("magic"));
    REQUIRE_THROWS_AS(io::check_state_for(g, Weights::zeros(12, 4, Variant::noise)), Error);
    REQUIRE_NOTHROW(io::check_state_for(g, Weights::zeros(6, 4, Variant::noise)));
}

TEST_CASE("files on disk", "[io]") {
    const auto wp = temp_path("w.ncaw"), sp = temp_path("s.ncst");
    const auto w = constructions::random<float>(5, 7, Variant::vanilla, 3);
    io::save_weights(w, wp.string());
    REQUIRE(io::load_weights(wp.string()) == w);
    const Grid g = test::random_grid(3, 4, 5, 2);
    io::save_state(g, sp.string());
    REQUIRE(io::load_state(sp.string()) == g);
    std::filesystem::remove(wp);
    std::filesystem::remove(sp);
    REQUIRE_THROWS_AS(io::load_weights(wp.string()), Error);
}

TEST_CASE("PNG value mapping", "[io][png]") {
    REQUIRE(io::to_byte(0.f) == 0);
    REQUIRE(io::to_byte(1.f) == 255);
    REQUIRE(io::to_byte(0.5f) == 128);
    REQUIRE(io::to_byte(-3.f) == 0);
    REQUIRE(io::to_byte(7.f) == 255);
    REQUIRE(io::to_byte(1.f / 255.f) == 1);

    for (auto [fill, expect] : {std::pair{0.f, 0}, {1.f, 255}, {0.5f, 128}}) {
        const Image back = io::decode_png(io::encode_png(Image(5, 7, fill)));
        REQUIRE(back.height == 5);
        REQUIRE(back.width == 7);
        for (float v : back.rgb) REQUIRE(v == static_cast<float>(expect) / 255.f);
    }
}

TEST_CASE("PNG of a grid", "[io][png]") {
    Grid g(4, 4, 5);
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x) {
            g.at(y, x, 0) = 0.2f;
            g.at(y, x, 1) = 2.0f;
            g.at(y, x, 2) = static_cast<float>(x) / 3.f;
        }
    const auto p = temp_path("g.png");
    io::save_image(rgb_of(g), p.string());
    const Image back = io::load_image(p.string());
    std::filesystem::remove(p);
    REQUIRE(back.rgb[0] == 51.f / 255.f);
    REQUIRE(back.rgb[1] == 1.f);
    REQUIRE(back.rgb[3 * 3 + 2] == 1.f);
    const auto rgba = io::to_rgba8(rgb_of(g));
    REQUIRE(rgba.size() == 64);
    REQUIRE(rgba[3] == 255);
    REQUIRE_THROWS_AS(io::decode_png({1, 2, 3}), Error);
}
