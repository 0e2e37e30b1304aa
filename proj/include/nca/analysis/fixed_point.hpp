#pragma once

// Quiescent (uniform) states. For a uniform grid every derivative block of
// the perception vector vanishes, so the update reduces to
//   g(S) = || W2 relu(W1_id S + b1) ||_1,
// a piecewise-linear function of S (convex only when W2 keeps one sign per
// row) that is minimized by subgradient descent.

#include <cmath>
#include <cstddef>
#include <vector>

#include "nca/core.hpp"

namespace nca {

struct FixedPointResult {
    std::vector<double> state;    // S_fp, length C
    double objective = 0;         // g(S_fp)
    std::size_t iterations = 0;
    bool converged = false;       // objective <= tol
    std::vector<double> trace;    // best objective after each iteration (non-increasing)
};

struct FixedPointOptions {
    double tol = 1e-6;
    std::size_t max_iters = 10000;
    double relaxation = 1.0;  // initial multiplier of the Polyak step
};

namespace detail {

class QuiescentObjective {
public:
    explicit QuiescentObjective(const Weights& w) : c_(w.channels), d_(w.hidden), k_(w.input_width()), w_(w) {}

    /// g(S); when `grad` is non-null also stores a subgradient (sign(0) = 0,
    /// relu'(0) = 0).
    double operator()(const std::vector<double>& s, std::vector<double>* grad) const {
        std::vector<double> u(d_), out(c_, 0.0);
        for (std::size_t r = 0; r < d_; ++r) {
            double acc = w_.b1[r];
            for (std::size_t c = 0; c < c_; ++c) acc += static_cast<double>(w_.w1[r * k_ + c]) * s[c];
            u[r] = acc;
        }
        for (std::size_t c = 0; c < c_; ++c)
            for (std::size_t r = 0; r < d_; ++r)
                if (u[r] > 0) out[c] += static_cast<double>(w_.w2[c * d_ + r]) * u[r];
        double g = 0;
        for (double o : out) g += std::abs(o);
        if (grad) {
            grad->assign(c_, 0.0);
            for (std::size_t r = 0; r < d_; ++r) {
                if (!(u[r] > 0)) continue;
                double back = 0;
                for (std::size_t c = 0; c < c_; ++c) {
                    const double sg = out[c] > 0 ? 1.0 : (out[c] < 0 ? -1.0 : 0.0);
                    back += static_cast<double>(w_.w2[c * d_ + r]) * sg;
                }
                for (std::size_t c = 0; c < c_; ++c) (*grad)[c] += static_cast<double>(w_.w1[r * k_ + c]) * back;
            }
        }
        return g;
    }

private:
    std::size_t c_, d_, k_;
    const Weights& w_;
};

}  // namespace detail

/// || W2 relu(W1_id S + b1) ||_1 for a uniform state S.
inline double quiescent_objective(const Weights& w, const std::vector<double>& s) {
    if (s.size() != w.channels) throw Error(ErrorKind::shape, "state length must equal C");
    return detail::QuiescentObjective(w)(s, nullptr);
}

/// Subgradient descent from `init` with Polyak steps theta * g / |dg|^2
/// (g >= 0 is a valid lower bound). Every iteration moves; theta halves
/// whenever the move fails to improve on the best objective so far and
/// starts over at `relaxation` once it drops below 1e-3. Returns the best
/// iterate.
inline FixedPointResult find_fixed_point(const Weights& w, std::vector<double> init,
                                         const FixedPointOptions& opt = {}) {
    validate(w);
    if (w.variant == Variant::pe)
        throw Error(ErrorKind::usage, "fixed points are undefined with positional encoding (no uniform states)");
    if (init.size() != w.channels) throw Error(ErrorKind::shape, "initial state length must equal C");
    const detail::QuiescentObjective g(w);

    FixedPointResult res;
    std::vector<double> s = init, grad;
    double cur = g(s, &grad);
    res.state = s;
    res.objective = cur;
    double theta = opt.relaxation;
    while (res.objective > opt.tol && res.iterations < opt.max_iters) {
        double norm = 0;
        for (double v : grad) norm += v * v;
        if (norm == 0) break;
        const double step = theta * cur / norm;
        for (std::size_t c = 0; c < s.size(); ++c) s[c] -= step * grad[c];
        cur = g(s, &grad);
        ++res.iterations;
        if (cur < res.objective) {
            res.objective = cur;
            res.state = s;
        } else {
            theta *= 0.5;
            if (theta < 1e-3 * opt.relaxation) theta = opt.relaxation;
        }
        res.trace.push_back(res.objective);
    }
    res.converged = res.objective <= opt.tol;
    return res;
}

}  // namespace nca
