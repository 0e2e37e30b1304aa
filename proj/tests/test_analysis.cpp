#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "nca/analysis/fixed_point.hpp"
#include "nca/analysis/lyapunov.hpp"
#include "nca/analysis/range.hpp"
#include "nca/analysis/resize.hpp"
#include "nca/analysis/sweep.hpp"
#include "nca/analysis/texture_distance.hpp"
#include "nca/constructions.hpp"
#include "support.hpp"

using namespace nca;

namespace {

Image noise_image(std::size_t h, std::size_t w, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    Image img(h, w);
    for (auto& v : img.rgb) v = u(gen);
    return img;
}

Image stripes(std::size_t h, std::size_t w) {
    Image img(h, w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c)
                img.rgb[(y * w + x) * 3 + c] = static_cast<float>(
                    0.5 + 0.4 * std::sin(2 * M_PI * (3.0 * static_cast<double>(x) + static_cast<double>(c * y)) /
                                         static_cast<double>(w)));
    return img;
}

Image cyclic_shift(const Image& img, std::size_t dy, std::size_t dx) {
    Image out(img.height, img.width);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
            for (std::size_t c = 0; c < 3; ++c)
                out.rgb[(((y + dy) % img.height) * img.width + (x + dx) % img.width) * 3 + c] =
                    img.rgb[(y * img.width + x) * 3 + c];
    return out;
}

SimSpec<float> small_spec(const Weights& w, double duration) {
    auto spec = SimSpec<float>::for_weights(w, 16, 16);
    spec.duration = duration;
    return spec;
}

}  // namespace

TEST_CASE("texture distance examples", "[analysis][texture]") {
    const Image a = stripes(64, 64);
    REQUIRE(texture_distance(a, a) == 0.0);

    const double unrelated = texture_distance(a, noise_image(64, 64, 1));
    REQUIRE(unrelated > 0);
    for (auto [dy, dx] : {std::pair<std::size_t, std::size_t>{0, 8}, {6, 10}, {3, 5}})
        REQUIRE(texture_distance(a, cyclic_shift(a, dy, dx)) < 0.05 * unrelated);

    REQUIRE(texture_distance(Image(32, 32, 0.f), Image(32, 32, 1.f)) > 0);
    REQUIRE_THROWS_AS(texture_distance(Image(32, 32), Image(32, 16)), Error);
}

TEST_CASE("texture distance is a pseudometric", "[analysis][texture][property]") {
    const TextureMetric metric;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto ea = metric.embedding(noise_image(32, 32, 10 * s));
        const auto eb = metric.embedding(stripes(32, 32));
        const auto ec = metric.embedding(noise_image(32, 32, 10 * s + 1));
        const double ab = TextureMetric::distance(ea, eb), ba = TextureMetric::distance(eb, ea);
        REQUIRE(ab == ba);
        REQUIRE(TextureMetric::distance(ea, ea) == 0.0);
        REQUIRE(ab <= TextureMetric::distance(ea, ec) + TextureMetric::distance(ec, eb) + 1e-12);
    }
    REQUIRE(TextureMetric().embedding(stripes(32, 32)) == metric.embedding(stripes(32, 32)));
}

TEST_CASE("range mini-language", "[analysis][range]") {
    REQUIRE(parse_number("2^-4") == 0.0625);
    REQUIRE(parse_number("1e-3") == 1e-3);
    REQUIRE_THROWS_AS(parse_number("abc"), Error);
    REQUIRE_THROWS_AS(parse_number("2^x"), Error);

    const auto dt = parse_range("1e-3..1e0:10log");
    REQUIRE(dt.size() == 10);
    REQUIRE(dt.front() == 1e-3);
    REQUIRE(dt.back() == 1.0);
    for (std::size_t i = 1; i < dt.size(); ++i) REQUIRE(dt[i] / dt[i - 1] == Catch::Approx(std::pow(10.0, 1.0 / 3)));

    const auto dx = parse_range("2^-4..2^0:11log");
    REQUIRE(dx.size() == 11);
    REQUIRE(dx.front() == 0.0625);
    REQUIRE(dx.back() == 1.0);
    REQUIRE(dx[5] == Catch::Approx(0.25));

    REQUIRE(parse_range("0..1:5lin") == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
    REQUIRE(parse_range("0.5,1,2^-2") == std::vector<double>{0.5, 1, 0.25});
    REQUIRE_THROWS_AS(parse_range("1..2:3cubic"), Error);
    REQUIRE_THROWS_AS(parse_range("0..1:3log"), Error);
}

TEST_CASE("cell-size sweep plan", "[analysis][sweep]") {
    REQUIRE(dx_plan(1.0).grid == 128);
    REQUIRE(dx_plan(1.0).dt == 1.0);
    REQUIRE(dx_plan(0.5).grid == 256);
    REQUIRE(dx_plan(0.5).dt == 0.25);
    REQUIRE(dx_plan(0.0625).grid == 2048);
    REQUIRE(dx_plan(0.0625).dt == std::ldexp(1.0, -8));
    for (double v : parse_range("2^-4..2^0:11log")) {
        const auto p = dx_plan(v);
        REQUIRE(p.grid == static_cast<std::size_t>(std::ceil(128 / v - 1e-6)));
        REQUIRE(p.dt == std::min(1.0, v * v));
    }
}

TEST_CASE("time-step sweep examples", "[analysis][sweep]") {
    const auto w = constructions::random<float>(4, 8, Variant::noise, 3, 0.3);
    const Image target = noise_image(16, 16, 9);
    SweepOptions opt;
    opt.duration = 2;
    opt.base_size = 16;
    opt.jobs = 2;

    const auto single = sweep_dt(small_spec(w, 2), target, {1.0}, opt);
    REQUIRE(single.rows.size() == 1);
    REQUIRE(single.rows[0].ratio == 1.0);

    auto zero = w;
    std::fill(zero.w2.begin(), zero.w2.end(), 0.f);
    opt.duration = 0.05;
    const auto flat = sweep_dt(small_spec(zero, 0.05), target, parse_range("1e-3..1e0:10log"), opt);
    REQUIRE(flat.rows.size() == 10);
    for (std::size_t i = 0; i < flat.rows.size(); ++i) {
        REQUIRE(flat.rows[i].ratio == 1.0);
        if (i > 0) REQUIRE(flat.rows[i].value > flat.rows[i - 1].value);
    }
    REQUIRE(flat.rows.front().steps == 50);

    opt.duration = 2;
    const auto live = sweep_dt(small_spec(w, 2), target, {0.25, 0.5, 1.0}, opt);
    REQUIRE(live.rows.back().ratio == 1.0);
    REQUIRE(live.reference_loss == live.rows.back().loss);

    REQUIRE_THROWS_AS(sweep_dt(small_spec(w, 2), target, {1.5}, opt), Error);
    REQUIRE_THROWS_AS(sweep_dt(small_spec(w, 2), target, {0.0}, opt), Error);
}

TEST_CASE("sweep results do not depend on the job count", "[analysis][sweep][determinism]") {
    const auto w = constructions::random<float>(4, 8, Variant::noise, 5, 0.3);
    const Image target = stripes(16, 16);
    SweepOptions opt;
    opt.duration = 1;
    opt.base_size = 16;
    opt.jobs = 1;
    const auto a = sweep_dx(small_spec(w, 1), target, {0.5, 0.25}, opt);
    opt.jobs = 3;
    const auto b = sweep_dx(small_spec(w, 1), target, {0.5, 0.25}, opt);
    REQUIRE(a.rows.size() == 2);
    REQUIRE(a.rows[0].value == 0.25);
    REQUIRE(a.rows[0].grid == 64);
    REQUIRE(a.rows[0].dt == 0.0625);
    REQUIRE(a.rows[1].grid == 32);
    for (std::size_t i = 0; i < a.rows.size(); ++i) REQUIRE(a.rows[i].loss == b.rows[i].loss);
    REQUIRE(a.reference_loss == b.reference_loss);
}

TEST_CASE("sweep report serialisation", "[analysis][sweep]") {
    SweepReport r;
    r.axis = SweepAxis::dt;
    r.duration = 300;
    r.variant = "noise";
    r.rows = {{0.5, 2.0, 0.5, 128, 0.5, 600}, {1.0, 1.0, 1.0, 128, 1.0, 300}};
    std::ostringstream out;
    write_tsv(r, out);
    const std::string tsv = out.str();
    REQUIRE(tsv.find("value\tloss\tratio\n0.5\t2\t0.5\n1\t1\t1\n") != std::string::npos);
    REQUIRE(tsv.rfind("# axis=dt", 0) == 0);
    const auto j = to_json(r);
    REQUIRE(j["rows"].size() == 2);
    REQUIRE(j["rows"][1]["ratio"] == 1.0);
    REQUIRE(j["axis"] == "dt");
}

TEST_CASE("bilinear resize", "[analysis][resize]") {
    Image img(2, 2);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t c = 0; c < 3; ++c) img.rgb[i * 3 + c] = static_cast<float>(i);
    REQUIRE(resize_bilinear(img, 2, 2) == img);
    const Image big = resize_bilinear(img, 4, 4);
    // half-pixel centres: output (0,0) maps onto the corner, (1,1) samples (0.25, 0.25)
    REQUIRE(big.rgb[0] == 0.f);
    REQUIRE(big.rgb[(1 * 4 + 1) * 3] == Catch::Approx(0.75));
    const Image flat = resize_bilinear(Image(7, 5, 0.3f), 3, 11);
    for (float v : flat.rgb) REQUIRE(v == Catch::Approx(0.3f));
}

TEST_CASE("fixed point: zero output layer", "[analysis][fixed-point]") {
    const auto w = Weights::zeros(4, 8, Variant::noise);
    const auto r = find_fixed_point(w, {0.1, 0.2, 0.3, 0.4});
    REQUIRE(r.converged);
    REQUIRE(r.objective == 0.0);
    REQUIRE(r.state == std::vector<double>{0.1, 0.2, 0.3, 0.4});
}

TEST_CASE("fixed point: shifted identity recovers its root", "[analysis][fixed-point]") {
    for (float a : {0.3f, -1.25f, 2.0f}) {
        const auto w = constructions::shifted_identity<float>({a});
        const auto r = find_fixed_point(w, {0.0});
        REQUIRE(r.converged);
        REQUIRE(std::abs(r.state[0] - a) <= 1e-6);
        REQUIRE(r.iterations <= 10000);
        for (std::size_t i = 1; i < r.trace.size(); ++i) REQUIRE(r.trace[i] <= r.trace[i - 1]);
    }
    const auto w3 = constructions::shifted_identity<float>({0.5f, -0.5f, 0.125f});
    const auto r3 = find_fixed_point(w3, {0.0, 0.0, 0.0});
    REQUIRE(r3.converged);
    for (std::size_t c = 0; c < 3; ++c) REQUIRE(std::abs(r3.state[c] - w3.b1[2 * c + 1]) <= 1e-6);
}

TEST_CASE("fixed point: random weights beat random probes", "[analysis][fixed-point][oracle]") {
    const auto w = constructions::random<float>(3, 8, Variant::noise, 0, 1.0);
    const auto r = find_fixed_point(w, {0.0, 0.0, 0.0});
    for (std::size_t i = 1; i < r.trace.size(); ++i) REQUIRE(r.trace[i] <= r.trace[i - 1]);
    REQUIRE(r.objective == quiescent_objective(w, r.state));
    std::mt19937_64 gen(0);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> probe{u(gen), u(gen), u(gen)};
        REQUIRE(r.objective <= quiescent_objective(w, probe));
    }
}

TEST_CASE("fixed point input checks", "[analysis][fixed-point][errors]") {
    REQUIRE_THROWS_AS(find_fixed_point(Weights::zeros(3, 4, Variant::pe), {0, 0, 0}), Error);
    REQUIRE_THROWS_AS(find_fixed_point(Weights::zeros(3, 4, Variant::noise), {0, 0}), Error);
    FixedPointOptions opt;
    opt.max_iters = 3;
    const auto w = constructions::random<float>(3, 8, Variant::noise, 0, 1.0);
    const auto r = find_fixed_point(w, {0.0, 0.0, 0.0}, opt);
    REQUIRE_FALSE(r.converged);
    REQUIRE(r.iterations == 3);
    REQUIRE(r.objective <= quiescent_objective(w, {0.0, 0.0, 0.0}));
}

TEST_CASE("MLE of a constant update is log|c|", "[analysis][mle][oracle]") {
    for (float c : {0.5f, -3.0f, 0.1f}) {
        const auto spec = small_spec(constructions::constant<float>(3, c), 1);
        for (double dt : {1.0, 0.1}) {
            const auto r = estimate_mle(spec, 3.0, dt);
            REQUIRE(std::abs(r.lambda - std::log(std::abs(static_cast<double>(c)))) <= 1e-9);
            REQUIRE_FALSE(r.degenerate);
        }
    }
}

TEST_CASE("MLE of linear decay matches the closed form", "[analysis][mle][oracle]") {
    const double k = 0.5;
    auto check = [&](auto spec, double T, double dt, double tol) {
        const auto seed = spec.initial();
        double ss = 0;
        for (auto v : seed.data()) ss += static_cast<double>(v) * v;
        const double r0 = std::sqrt(ss / static_cast<double>(seed.data().size()));
        const auto r = estimate_mle(spec, T, dt);
        const auto n = static_cast<double>(r.samples - 1);
        REQUIRE(n == std::ceil(T / dt - 1e-9));
        const double expected = std::log(k * r0) + n / 2 * std::log(1 - k * dt);
        REQUIRE(std::abs(r.lambda - expected) <= tol * std::abs(expected));
    };
    auto fspec = small_spec(constructions::decay<float>(3, static_cast<float>(k)), 1);
    check(fspec, 2.0, 0.1, 1e-6);
    check(fspec, 50.0, 0.1, 1e-6);
    auto dspec = SimSpec<double>::for_weights(constructions::decay<double>(3, k), 16, 16);
    check(dspec, 50.0, 0.01, 1e-9);
}

TEST_CASE("MLE degenerate and invalid cases", "[analysis][mle]") {
    const auto r = estimate_mle(small_spec(Weights::zeros(3, 2, Variant::noise), 1), 2.0, 1.0);
    REQUIRE(r.degenerate);
    REQUIRE(r.samples == 3);
    auto masked = small_spec(Weights::zeros(3, 2, Variant::vanilla), 1);
    REQUIRE_THROWS_AS(estimate_mle(masked, 1.0, 1.0), Error);
}

TEST_CASE("MLE is invariant to grid translation", "[analysis][mle][property]") {
    const auto w = constructions::random<float>(4, 12, Variant::noise, 6, 0.3);
    auto spec = small_spec(w, 1);
    const Grid seed = make_seed(16, 16, 4, SeedSpec{SeedMode::uniform_noise, 0.25, 2});
    spec.initial_state = seed;
    const double a = estimate_mle(spec, 5.0, 0.5).lambda;
    spec.initial_state = test::shift(seed, 5, 11);
    const double b = estimate_mle(spec, 5.0, 0.5).lambda;
    REQUIRE(std::abs(a - b) <= 1e-12 * std::abs(a));
}
