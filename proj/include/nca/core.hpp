#pragma once

// Data model shared by every stage of the engine: the cell grid, the learned
// rule weights, the space-time discretization and the RGB view of a grid.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nca {

enum class ErrorKind {
    shape,        // mismatched dimensions between inputs
    validation,   // a value violates a type invariant
    format,       // malformed or truncated serialized data
    numeric,      // non-finite values produced by the integrator
    io,           // file system errors
    usage,        // bad arguments at an API / CLI boundary
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Non-finite state detected after an integration step.
class NumericError : public Error {
public:
    NumericError(std::int64_t step, const std::string& what)
        : Error(ErrorKind::numeric, what), step_(step) {}
    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

enum class Variant : std::uint8_t { vanilla = 0, pe = 1, noise = 2 };
enum class Padding : std::uint8_t { circular = 0, replicate = 1 };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::vanilla: return "vanilla";
        case Variant::pe: return "pe";
        case Variant::noise: return "noise";
    }
    return "?";
}

inline const char* to_string(Padding p) {
    return p == Padding::circular ? "circular" : "replicate";
}

inline Variant parse_variant(const std::string& s) {
    if (s == "vanilla") return Variant::vanilla;
    if (s == "pe") return Variant::pe;
    if (s == "noise") return Variant::noise;
    throw Error(ErrorKind::usage, "unknown variant '" + s + "'");
}

/// Padding mode a variant is trained with.
constexpr Padding default_padding(Variant v) {
    return v == Variant::pe ? Padding::replicate : Padding::circular;
}

/// Number of positional channels appended to the perception vector.
constexpr std::size_t positional_channels(Variant v) { return v == Variant::pe ? 2 : 0; }

/// State field S(x, y, t): H x W cells of C channels, row-major (y, x, channel).
template <std::floating_point T = float>
class CellGrid {
public:
    using value_type = T;

    CellGrid() = default;
    CellGrid(std::size_t height, std::size_t width, std::size_t channels, double t = 0.0)
        : h_(height), w_(width), c_(channels), t_(t), data_(height * width * channels, T(0)) {
        if (height < 3 || width < 3 || channels < 3)
            throw Error(ErrorKind::shape, "grid needs H, W, C >= 3, got " + dims_string());
    }
    CellGrid(std::size_t height, std::size_t width, std::size_t channels, std::vector<T> data,
             double t = 0.0)
        : h_(height), w_(width), c_(channels), t_(t), data_(std::move(data)) {
        if (height < 3 || width < 3 || channels < 3)
            throw Error(ErrorKind::shape, "grid needs H, W, C >= 3, got " + dims_string());
        if (data_.size() != height * width * channels)
            throw Error(ErrorKind::shape, "grid data length does not match " + dims_string());
    }

    std::size_t height() const noexcept { return h_; }
    std::size_t width() const noexcept { return w_; }
    std::size_t channels() const noexcept { return c_; }
    std::size_t cells() const noexcept { return h_ * w_; }
    double time() const noexcept { return t_; }
    void set_time(double t) noexcept { t_ = t; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    std::span<T> cell(std::size_t y, std::size_t x) noexcept {
        return {data_.data() + (y * w_ + x) * c_, c_};
    }
    std::span<const T> cell(std::size_t y, std::size_t x) const noexcept {
        return {data_.data() + (y * w_ + x) * c_, c_};
    }
    T& at(std::size_t y, std::size_t x, std::size_t ch) noexcept { return data_[(y * w_ + x) * c_ + ch]; }
    T at(std::size_t y, std::size_t x, std::size_t ch) const noexcept {
        return data_[(y * w_ + x) * c_ + ch];
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    bool same_shape(const CellGrid& o) const noexcept {
        return h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
    }

    /// Bitwise equality of shape, time and payload.
    friend bool operator==(const CellGrid& a, const CellGrid& b) = default;

    std::string dims_string() const {
        return std::to_string(h_) + "x" + std::to_string(w_) + "x" + std::to_string(c_);
    }

private:
    std::size_t h_ = 0, w_ = 0, c_ = 0;
    double t_ = 0.0;
    std::vector<T> data_;
};

using Grid = CellGrid<float>;

/// H x W x 3 image with channel values in [0, 1].
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> rgb;  // (y, x, channel) row-major

    Image() = default;
    Image(std::size_t h, std::size_t w, float fill = 0.f) : height(h), width(w), rgb(h * w * 3, fill) {}

    float& at(std::size_t y, std::size_t x, std::size_t ch) { return rgb[(y * width + x) * 3 + ch]; }
    float at(std::size_t y, std::size_t x, std::size_t ch) const { return rgb[(y * width + x) * 3 + ch]; }
    friend bool operator==(const Image&, const Image&) = default;
};

/// First three channels clamped to [0, 1].
template <std::floating_point T>
Image rgb_of(const CellGrid<T>& grid) {
    Image img(grid.height(), grid.width());
    for (std::size_t y = 0; y < grid.height(); ++y)
        for (std::size_t x = 0; x < grid.width(); ++x)
            for (std::size_t ch = 0; ch < 3; ++ch)
                img.at(y, x, ch) = static_cast<float>(std::clamp<T>(grid.at(y, x, ch), T(0), T(1)));
    return img;
}

/// The update rule theta = (W1, b1, W2) plus the fixed perception settings it
/// was trained with.
template <std::floating_point T = float>
struct RuleWeights {
    std::size_t channels = 12;   // C
    std::size_t hidden = 96;     // D
    Variant variant = Variant::noise;
    Padding padding = Padding::circular;
    T sobel_divisor = T(8);
    T laplacian_divisor = T(4);
    std::vector<T> w1;  // D x (4C + p), row-major
    std::vector<T> b1;  // D
    std::vector<T> w2;  // C x D, row-major

    std::size_t input_width() const noexcept { return 4 * channels + positional_channels(variant); }

    /// Zero-initialized weights with consistent shapes.
    static RuleWeights zeros(std::size_t c, std::size_t d, Variant v) {
        RuleWeights w;
        w.channels = c;
        w.hidden = d;
        w.variant = v;
        w.padding = default_padding(v);
        w.w1.assign(d * w.input_width(), T(0));
        w.b1.assign(d, T(0));
        w.w2.assign(c * d, T(0));
        return w;
    }

    T& w1_at(std::size_t row, std::size_t col) { return w1[row * input_width() + col]; }
    T& w2_at(std::size_t row, std::size_t col) { return w2[row * hidden + col]; }

    friend bool operator==(const RuleWeights&, const RuleWeights&) = default;
};

using Weights = RuleWeights<float>;

/// Throws Error(validation) naming the first violated invariant.
template <std::floating_point T>
void validate(const RuleWeights<T>& w) {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::validation, m); };
    if (w.channels < 1) fail("weights: C must be >= 1");
    if (w.hidden < 1) fail("weights: D must be >= 1");
    const std::size_t k = w.input_width();
    if (w.w1.size() != w.hidden * k)
        fail("weights: W1 has " + std::to_string(w.w1.size()) + " entries, expected " +
             std::to_string(w.hidden) + "x" + std::to_string(k));
    if (w.b1.size() != w.hidden) fail("weights: b1 length does not match D");
    if (w.w2.size() != w.channels * w.hidden)
        fail("weights: W2 has " + std::to_string(w.w2.size()) + " entries, expected " +
             std::to_string(w.channels) + "x" + std::to_string(w.hidden));
    auto finite = [](const std::vector<T>& v) {
        return std::all_of(v.begin(), v.end(), [](T x) { return std::isfinite(x); });
    };
    if (!finite(w.w1)) fail("weights: W1 has non-finite entries");
    if (!finite(w.b1)) fail("weights: b1 has non-finite entries");
    if (!finite(w.w2)) fail("weights: W2 has non-finite entries");
    if (w.padding != default_padding(w.variant))
        fail(std::string("weights: variant ") + to_string(w.variant) + " requires " +
             to_string(default_padding(w.variant)) + " padding");
    if (!(w.sobel_divisor > 0) || !std::isfinite(w.sobel_divisor)) fail("weights: sobel_divisor must be > 0");
    if (!(w.laplacian_divisor > 0) || !std::isfinite(w.laplacian_divisor))
        fail("weights: laplacian_divisor must be > 0");
}

/// Per-cell cell size: either one scalar for the whole grid or an H x W field.
/// A scalar behaves exactly like the constant field.
class CellSize {
public:
    CellSize(double uniform = 1.0) : uniform_(uniform) { check(uniform); }
    CellSize(std::size_t h, std::size_t w, std::vector<double> field)
        : h_(h), w_(w), field_(std::move(field)) {
        if (field_.size() != h * w) throw Error(ErrorKind::shape, "cell-size field length != H*W");
        for (double v : field_) check(v);
    }

    bool is_uniform() const noexcept { return field_.empty(); }
    double uniform_value() const noexcept { return uniform_; }
    std::size_t height() const noexcept { return h_; }
    std::size_t width() const noexcept { return w_; }
    std::span<const double> field() const noexcept { return field_; }

    double at(std::size_t y, std::size_t x) const noexcept {
        return field_.empty() ? uniform_ : field_[y * w_ + x];
    }
    double min() const noexcept {
        return field_.empty() ? uniform_ : *std::min_element(field_.begin(), field_.end());
    }
    double max() const noexcept {
        return field_.empty() ? uniform_ : *std::max_element(field_.begin(), field_.end());
    }

    /// Same cell size multiplied everywhere by m > 0.
    CellSize scaled(double m) const {
        if (field_.empty()) return CellSize(uniform_ * m);
        std::vector<double> f(field_);
        for (double& v : f) v *= m;
        return CellSize(h_, w_, std::move(f));
    }

    bool matches(std::size_t h, std::size_t w) const noexcept {
        return field_.empty() || (h_ == h && w_ == w);
    }

private:
    static void check(double v) {
        if (!(v > 0) || !std::isfinite(v))
            throw Error(ErrorKind::validation, "cell size must be finite and > 0");
    }

    double uniform_ = 1.0;
    std::size_t h_ = 0, w_ = 0;
    std::vector<double> field_;
};

/// Piecewise-linear multiplier m(t) from (time, multiplier) keyframes; held
/// constant outside the keyframe range.
class ScaleKeyframes {
public:
    ScaleKeyframes() = default;
    explicit ScaleKeyframes(std::vector<std::pair<double, double>> keys) : keys_(std::move(keys)) {
        std::sort(keys_.begin(), keys_.end());
        for (auto& [t, m] : keys_)
            if (!(m > 0) || !std::isfinite(m) || !std::isfinite(t))
                throw Error(ErrorKind::validation, "scale keyframe multipliers must be finite and > 0");
    }

    bool empty() const noexcept { return keys_.empty(); }
    const auto& keys() const noexcept { return keys_; }

    double at(double t) const noexcept {
        if (keys_.empty()) return 1.0;
        if (t <= keys_.front().first) return keys_.front().second;
        if (t >= keys_.back().first) return keys_.back().second;
        auto hi = std::upper_bound(keys_.begin(), keys_.end(), t,
                                   [](double v, const auto& k) { return v < k.first; });
        auto lo = hi - 1;
        double u = (t - lo->first) / (hi->first - lo->first);
        return lo->second + u * (hi->second - lo->second);
    }

private:
    std::vector<std::pair<double, double>> keys_;
};

/// Space-time sampling: time step and per-cell cell sizes, optionally scaled
/// over time.
struct Discretization {
    double dt = 1.0;
    CellSize dx{1.0};
    CellSize dy{1.0};
    ScaleKeyframes time_scale;

    /// Cell sizes in effect at simulation time t.
    Discretization at_time(double t) const {
        if (time_scale.empty()) return *this;
        double m = time_scale.at(t);
        Discretization d{dt, dx.scaled(m), dy.scaled(m), {}};
        return d;
    }

    void check(std::size_t h, std::size_t w) const {
        if (!(dt > 0) || !std::isfinite(dt)) throw Error(ErrorKind::validation, "dt must be finite and > 0");
        if (!dx.matches(h, w) || !dy.matches(h, w))
            throw Error(ErrorKind::shape, "cell-size field shape does not match the grid");
    }
};

}  // namespace nca
