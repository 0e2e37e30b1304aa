#pragma once

// Appearance proxy: Gram-matrix distance over a fixed random convolutional
// feature stack (3 -> 16 -> 32 -> 64 channels, 3x3, stride 2, circular
// padding, ReLU). The stack is generated from a hard-coded seed so scores are
// comparable across machines.
//
// The strided layers are evaluated undecimated (layer l as a stride-1
// convolution dilated by 2^l), i.e. at every sampling phase of the stride-2
// network. Position-averaged Grams are then exactly invariant to cyclic shifts.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "nca/core.hpp"
#include "nca/rng.hpp"

namespace nca {

class TextureMetric {
public:
    static constexpr std::uint64_t network_seed = 0;
    static constexpr std::array<std::size_t, 4> widths{3, 16, 32, 64};

    TextureMetric() {
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const std::size_t in = widths[l], out = widths[l + 1];
            const double bound = std::sqrt(6.0 / static_cast<double>(in * 9));  // He-uniform
            // stored as [tap][in][out]
            std::vector<double> w(out * in * 9);
            for (std::size_t co = 0; co < out; ++co)
                for (std::size_t ci = 0; ci < in; ++ci)
                    for (std::size_t tap = 0; tap < 9; ++tap) {
                        const std::size_t i = (co * in + ci) * 9 + tap;
                        w[(tap * in + ci) * out + co] = bound * (2.0 * rng::uniform(network_seed, l, 0, i) - 1.0);
                    }
            kernels_[l] = std::move(w);
        }
    }

    /// Concatenated upper-triangular Gram entries of every layer.
    std::vector<double> embedding(const Image& img) const {
        const std::size_t h = img.height, w = img.width;
        std::vector<double> act(img.rgb.size());
        for (std::size_t i = 0; i < act.size(); ++i) act[i] = static_cast<double>(img.rgb[i]) - 0.5;
        std::vector<double> emb;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const std::size_t cin = widths[l], cout = widths[l + 1];
            const std::size_t dil = std::size_t{1} << l;
            std::vector<double> next(h * w * cout, 0.0);
            const auto& k = kernels_[l];
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    double* o = &next[(y * w + x) * cout];
                    for (std::size_t ty = 0; ty < 3; ++ty) {
                        const std::size_t yy = (y + h * dil + ty * dil - dil) % h;
                        for (std::size_t tx = 0; tx < 3; ++tx) {
                            const std::size_t xx = (x + w * dil + tx * dil - dil) % w;
                            const double* in = &act[(yy * w + xx) * cin];
                            const double* kk = &k[(ty * 3 + tx) * cin * cout];
                            for (std::size_t ci = 0; ci < cin; ++ci) {
                                const double v = in[ci];
                                const double* kr = kk + ci * cout;
                                for (std::size_t co = 0; co < cout; ++co) o[co] += kr[co] * v;
                            }
                        }
                    }
                    for (std::size_t co = 0; co < cout; ++co) o[co] = std::max(0.0, o[co]);
                }
            // Gram matrix, averaged over positions
            const double n = static_cast<double>(h * w);
            std::vector<double> gram(cout * cout, 0.0);
            for (std::size_t p = 0; p < h * w; ++p) {
                const double* f = &next[p * cout];
                for (std::size_t i = 0; i < cout; ++i) {
                    const double fi = f[i];
                    double* g = &gram[i * cout];
                    for (std::size_t j = i; j < cout; ++j) g[j] += fi * f[j];
                }
            }
            for (std::size_t i = 0; i < cout; ++i)
                for (std::size_t j = i; j < cout; ++j)
                    // off-diagonal entries stand for two symmetric entries of the full matrix
                    emb.push_back(gram[i * cout + j] / n * (i == j ? 1.0 : std::sqrt(2.0)));
            act = std::move(next);
        }
        return emb;
    }

    static double distance(const std::vector<double>& a, const std::vector<double>& b) {
        if (a.size() != b.size()) throw Error(ErrorKind::shape, "embedding size mismatch");
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s);
    }

    double distance(const Image& a, const Image& b) const {
        if (a.height != b.height || a.width != b.width)
            throw Error(ErrorKind::shape, "texture_distance needs images of the same shape");
        return distance(embedding(a), embedding(b));
    }

private:
    std::array<std::vector<double>, 3> kernels_;
};

/// Frobenius distance between feature Gram matrices of two same-shape images.
inline double texture_distance(const Image& a, const Image& b) {
    static const TextureMetric metric;
    return metric.distance(a, b);
}

}  // namespace nca
