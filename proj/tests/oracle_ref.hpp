#pragma once

// Test-only reference implementation of every layer: straightforward nested
// loops in double precision, no im2col, no Eigen products. Kept independent
// of the library kernels so it can serve as the cross-check oracle for them.

#include "rxai/layers.hpp"
#include "rxai/tensor.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace rxai::test {

// Activation decisions taken during a forward pass (relu sign bits, maxpool
// argmax picks). Two evaluations that share a pattern lie in the same linear
// region of the piecewise-linear network, where central differences are
// exact.
using Pattern = std::vector<int64_t>;

inline TensorD ref_layer(const LayerSpec& l, const TensorD& in, Pattern* pattern = nullptr) {
    switch (l.kind) {
        case LayerKind::Conv2d: {
            const int cin = in.dim(0), h = in.dim(1), w = in.dim(2);
            const int oh = (h + 2 * l.padding - l.kernel) / l.stride + 1;
            const int ow = (w + 2 * l.padding - l.kernel) / l.stride + 1;
            TensorD out({l.out_channels, oh, ow});
            for (int o = 0; o < l.out_channels; ++o)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        double acc = static_cast<double>(l.bias->data[o]);
                        for (int c = 0; c < cin; ++c)
                            for (int dy = 0; dy < l.kernel; ++dy)
                                for (int dx = 0; dx < l.kernel; ++dx) {
                                    const int iy = oy * l.stride - l.padding + dy;
                                    const int ix = ox * l.stride - l.padding + dx;
                                    if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                    const int64_t widx =
                                        ((static_cast<int64_t>(o) * cin + c) * l.kernel + dy) *
                                            l.kernel + dx;
                                    acc += static_cast<double>(l.weights->data[widx]) * in.at(c, iy, ix);
                                }
                        out.at(o, oy, ox) = acc;
                    }
            return out;
        }
        case LayerKind::Relu: {
            TensorD out(in.shape);
            for (int64_t i = 0; i < in.size(); ++i) {
                out.data[i] = in.data[i] > 0.0 ? in.data[i] : 0.0;
                if (pattern) pattern->push_back(in.data[i] > 0.0 ? 1 : 0);
            }
            return out;
        }
        case LayerKind::MaxPool2d: {
            const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
            const int oh = (h + 2 * l.padding - l.kernel) / l.stride + 1;
            const int ow = (w + 2 * l.padding - l.kernel) / l.stride + 1;
            TensorD out({c, oh, ow});
            for (int k = 0; k < c; ++k)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        double best = -std::numeric_limits<double>::infinity();
                        int64_t best_idx = -1;
                        for (int dy = 0; dy < l.kernel; ++dy)
                            for (int dx = 0; dx < l.kernel; ++dx) {
                                const int iy = oy * l.stride - l.padding + dy;
                                const int ix = ox * l.stride - l.padding + dx;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                if (in.at(k, iy, ix) > best) {
                                    best = in.at(k, iy, ix);
                                    best_idx = (static_cast<int64_t>(k) * h + iy) * w + ix;
                                }
                            }
                        out.at(k, oy, ox) = best;
                        if (pattern) pattern->push_back(best_idx);
                    }
            return out;
        }
        case LayerKind::AvgPool2d: {
            const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
            const int oh = (h + 2 * l.padding - l.kernel) / l.stride + 1;
            const int ow = (w + 2 * l.padding - l.kernel) / l.stride + 1;
            TensorD out({c, oh, ow});
            for (int k = 0; k < c; ++k)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        double acc = 0.0;
                        for (int dy = 0; dy < l.kernel; ++dy)
                            for (int dx = 0; dx < l.kernel; ++dx) {
                                const int iy = oy * l.stride - l.padding + dy;
                                const int ix = ox * l.stride - l.padding + dx;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                acc += in.at(k, iy, ix);
                            }
                        out.at(k, oy, ox) = acc / (static_cast<double>(l.kernel) * l.kernel);
                    }
            return out;
        }
        case LayerKind::GlobalAvgPool: {
            const int c = in.dim(0);
            const int64_t area = static_cast<int64_t>(in.dim(1)) * in.dim(2);
            TensorD out({c});
            for (int k = 0; k < c; ++k) {
                double acc = 0.0;
                for (int64_t i = 0; i < area; ++i) acc += in.data[static_cast<int64_t>(k) * area + i];
                out.data[k] = acc / static_cast<double>(area);
            }
            return out;
        }
        case LayerKind::Linear: {
            TensorD out({l.out_features});
            for (int o = 0; o < l.out_features; ++o) {
                double acc = static_cast<double>(l.bias->data[o]);
                for (int i = 0; i < l.in_features; ++i)
                    acc += static_cast<double>(l.weights->data[static_cast<int64_t>(o) * l.in_features + i]) *
                           in.data[i];
                out.data[o] = acc;
            }
            return out;
        }
        case LayerKind::Softmax: {
            double m = -std::numeric_limits<double>::infinity();
            for (int64_t i = 0; i < in.size(); ++i) m = std::max(m, in.data[i]);
            double sum = 0.0;
            TensorD out(in.shape);
            for (int64_t i = 0; i < in.size(); ++i) {
                out.data[i] = std::exp(in.data[i] - m);
                sum += out.data[i];
            }
            for (int64_t i = 0; i < in.size(); ++i) out.data[i] /= sum;
            return out;
        }
        case LayerKind::Flatten:
            return TensorD({static_cast<int>(in.size())}, in.data);
    }
    throw std::logic_error("ref_layer: unhandled kind");
}

inline TensorD ref_chain(std::span<const LayerSpec> layers, const TensorD& in,
                         Pattern* pattern = nullptr) {
    TensorD x = in;
    for (const LayerSpec& l : layers) x = ref_layer(l, x, pattern);
    return x;
}

} // namespace rxai::test
