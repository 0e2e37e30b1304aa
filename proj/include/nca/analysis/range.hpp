#pragma once

// Sample-range mini-language: "A..B:Nlog" (log-uniform) or "A..B:Nlin".
// Endpoints accept plain numbers ("1e-3", "0.5") or powers of two ("2^-4").
// A bare comma list ("0.1,0.5,1") is taken verbatim.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nca/core.hpp"

namespace nca {

inline double parse_number(const std::string& s) {
    auto bad = [&] { return Error(ErrorKind::usage, "cannot parse number '" + s + "'"); };
    if (s.empty()) throw bad();
    try {
        std::size_t pos = 0;
        if (s.rfind("2^", 0) == 0) {
            const double e = std::stod(s.substr(2), &pos);
            if (pos != s.size() - 2) throw bad();
            return std::exp2(e);
        }
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw bad();
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        throw bad();
    }
}

/// `n` samples from a to b inclusive; endpoints are reproduced exactly.
inline std::vector<double> log_space(double a, double b, std::size_t n) {
    if (!(a > 0) || !(b > 0)) throw Error(ErrorKind::usage, "log range needs positive endpoints");
    std::vector<double> v(n);
    const double la = std::log(a), lb = std::log(b);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? a : std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(n - 1));
    if (n > 0) v.front() = a;
    if (n > 1) v.back() = b;
    return v;
}

inline std::vector<double> lin_space(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    if (n > 1) v.back() = b;
    return v;
}

inline std::vector<double> parse_range(const std::string& spec) {
    const auto dots = spec.find("..");
    if (dots == std::string::npos) {
        std::vector<double> out;
        std::size_t start = 0;
        while (start <= spec.size()) {
            const auto comma = spec.find(',', start);
            out.push_back(parse_number(spec.substr(start, comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    }
    const auto colon = spec.find(':', dots);
    if (colon == std::string::npos) throw Error(ErrorKind::usage, "range '" + spec + "' lacks ':N(log|lin)'");
    const double a = parse_number(spec.substr(0, dots));
    const double b = parse_number(spec.substr(dots + 2, colon - dots - 2));
    const std::string tail = spec.substr(colon + 1);
    const bool log = tail.size() > 3 && tail.ends_with("log");
    const bool lin = tail.size() > 3 && tail.ends_with("lin");
    if (!log && !lin) throw Error(ErrorKind::usage, "range '" + spec + "' must end in Nlog or Nlin");
    std::size_t pos = 0;
    long n = 0;
    try {
        n = std::stol(tail.substr(0, tail.size() - 3), &pos);
    } catch (...) {
        throw Error(ErrorKind::usage, "bad sample count in '" + spec + "'");
    }
    if (pos != tail.size() - 3 || n < 1) throw Error(ErrorKind::usage, "bad sample count in '" + spec + "'");
    return log ? log_space(a, b, static_cast<std::size_t>(n)) : lin_space(a, b, static_cast<std::size_t>(n));
}

}  // namespace nca
