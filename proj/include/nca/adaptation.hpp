#pragma once

// Adaptation stage: per-cell two-layer network dS = W2 relu(W1 z + b1).

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "nca/core.hpp"
#include "nca/parallel.hpp"
#include "nca/perception.hpp"

namespace nca {

/// Weights repacked column-major so the inner loops run over the output
/// index. Every output accumulates its terms in input order, in T.
template <std::floating_point T>
class PackedRule {
public:
    explicit PackedRule(const RuleWeights<T>& w)
        : c_(w.channels), d_(w.hidden), k_(w.input_width()), w1t_(k_ * d_), b1_(w.b1), w2t_(d_ * c_) {
        validate(w);
        for (std::size_t r = 0; r < d_; ++r)
            for (std::size_t k = 0; k < k_; ++k) w1t_[k * d_ + r] = w.w1[r * k_ + k];
        for (std::size_t c = 0; c < c_; ++c)
            for (std::size_t r = 0; r < d_; ++r) w2t_[r * c_ + c] = w.w2[c * d_ + r];
    }

    std::size_t channels() const noexcept { return c_; }
    std::size_t hidden() const noexcept { return d_; }
    std::size_t input_width() const noexcept { return k_; }

    /// `hidden` is scratch of length D.
    void apply(std::span<const T> z, std::span<T> hidden, std::span<T> out) const noexcept {
        T* h = hidden.data();
        std::copy(b1_.begin(), b1_.end(), h);
        for (std::size_t k = 0; k < k_; ++k) {
            const T zk = z[k];
            const T* col = &w1t_[k * d_];
            for (std::size_t r = 0; r < d_; ++r) h[r] += col[r] * zk;
        }
        for (std::size_t r = 0; r < d_; ++r) h[r] = h[r] > T(0) ? h[r] : T(0);
        T* o = out.data();
        std::fill(o, o + c_, T(0));
        for (std::size_t r = 0; r < d_; ++r) {
            const T hr = h[r];
            const T* col = &w2t_[r * c_];
            for (std::size_t c = 0; c < c_; ++c) o[c] += col[c] * hr;
        }
    }

private:
    std::size_t c_, d_, k_;
    std::vector<T> w1t_;
    std::vector<T> b1_;
    std::vector<T> w2t_;
};

/// H x W x C residual update (the dS/dt estimate before time-step scaling).
template <std::floating_point T>
CellGrid<T> residual(const PerceptionField<T>& z, const RuleWeights<T>& w, std::size_t threads = 1) {
    if (z.depth != w.input_width() || z.channels != w.channels)
        throw Error(ErrorKind::shape, "perception width " + std::to_string(z.depth) + " does not match weights (" +
                                          std::to_string(w.input_width()) + ")");
    const PackedRule<T> rule(w);
    CellGrid<T> out(z.height, z.width, w.channels);
    parallel_for(z.height, threads, [&](std::size_t b, std::size_t e) {
        std::vector<T> hidden(rule.hidden());
        for (std::size_t y = b; y < e; ++y)
            for (std::size_t x = 0; x < z.width; ++x) rule.apply(z.cell(y, x), hidden, out.cell(y, x));
    });
    return out;
}

}  // namespace nca
