#pragma once

// Builders for spatially and temporally varying cell sizes.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nca/analysis/range.hpp"
#include "nca/core.hpp"

namespace nca {

enum class ProfileShape {
    symmetric,  // `from` at both side borders, `to` at the center column
    ramp,       // `from` at the left border, `to` at the right border
};

/// Cell size varying exponentially along x: log2 interpolates linearly.
inline CellSize exp_profile_x(std::size_t h, std::size_t w, double from, double to, ProfileShape shape) {
    if (!(from > 0) || !(to > 0)) throw Error(ErrorKind::validation, "profile endpoints must be > 0");
    const double la = std::log2(from), lb = std::log2(to);
    std::vector<double> f(h * w);
    for (std::size_t x = 0; x < w; ++x) {
        const double s = w > 1 ? static_cast<double>(x) / static_cast<double>(w - 1) : 0.0;
        const double u = shape == ProfileShape::ramp ? s : 1.0 - std::abs(2.0 * s - 1.0);
        const double v = std::exp2(la + (lb - la) * u);
        for (std::size_t y = 0; y < h; ++y) f[y * w + x] = v;
    }
    return CellSize(h, w, std::move(f));
}

/// "exp:A..B:symmetric" or "exp:A..B:ramp" (A, B as in the range syntax),
/// or "const:V".
inline CellSize parse_profile(const std::string& spec, std::size_t h, std::size_t w) {
    if (spec.rfind("const:", 0) == 0) return CellSize(parse_number(spec.substr(6)));
    if (spec.rfind("exp:", 0) != 0) throw Error(ErrorKind::usage, "profile must start with 'exp:' or 'const:'");
    const std::string body = spec.substr(4);
    const auto dots = body.find("..");
    const auto colon = body.find(':', dots == std::string::npos ? 0 : dots);
    if (dots == std::string::npos || colon == std::string::npos)
        throw Error(ErrorKind::usage, "profile '" + spec + "' must look like exp:A..B:symmetric");
    const double a = parse_number(body.substr(0, dots));
    const double b = parse_number(body.substr(dots + 2, colon - dots - 2));
    const std::string shape = body.substr(colon + 1);
    if (shape == "symmetric") return exp_profile_x(h, w, a, b, ProfileShape::symmetric);
    if (shape == "ramp") return exp_profile_x(h, w, a, b, ProfileShape::ramp);
    throw Error(ErrorKind::usage, "unknown profile shape '" + shape + "'");
}

/// "t0:m0,t1:m1,..."
inline ScaleKeyframes parse_keyframes(const std::string& spec) {
    std::vector<std::pair<double, double>> keys;
    std::size_t start = 0;
    while (start < spec.size()) {
        auto comma = spec.find(',', start);
        if (comma == std::string::npos) comma = spec.size();
        const std::string item = spec.substr(start, comma - start);
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw Error(ErrorKind::usage, "keyframe '" + item + "' must be t:m");
        keys.emplace_back(parse_number(item.substr(0, colon)), parse_number(item.substr(colon + 1)));
        start = comma + 1;
    }
    if (keys.empty()) throw Error(ErrorKind::usage, "no scale keyframes given");
    return ScaleKeyframes(std::move(keys));
}

}  // namespace nca
