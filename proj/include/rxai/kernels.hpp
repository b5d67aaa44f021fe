#pragma once

// Per-layer forward kernels, templated on scalar so the float inference path
// and the double-precision finite-difference oracle share one definition.
// Pooling and fully-connected reductions accumulate in double regardless of
// the storage scalar.

#include "rxai/tensor.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace rxai::detail {

inline int conv_out_dim(int in, int kernel, int stride, int padding) {
    return (in + 2 * padding - kernel) / stride + 1;
}

template <typename S>
BasicTensor<S> conv2d_fwd(const BasicTensor<S>& in, const BasicTensor<S>& w,
                          const BasicTensor<S>& b, int stride, int padding) {
    const int cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = conv_out_dim(h, kh, stride, padding);
    const int ow = conv_out_dim(wd, kw, stride, padding);
    const int64_t positions = static_cast<int64_t>(oh) * ow;
    const int64_t patch = static_cast<int64_t>(cin) * kh * kw;

    // im2col: one column per output position, zero padding outside the input.
    Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> cols(patch, positions);
    cols.setZero();
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const int64_t col = static_cast<int64_t>(oy) * ow + ox;
            S* dst = cols.data() + col * patch;
            for (int c = 0; c < cin; ++c) {
                for (int dy = 0; dy < kh; ++dy) {
                    const int iy = oy * stride - padding + dy;
                    if (iy < 0 || iy >= h) { dst += kw; continue; }
                    const S* src = in.data.data() + (static_cast<int64_t>(c) * h + iy) * wd;
                    for (int dx = 0; dx < kw; ++dx) {
                        const int ix = ox * stride - padding + dx;
                        *dst++ = (ix >= 0 && ix < wd) ? src[ix] : S(0);
                    }
                }
            }
        }
    }

    Eigen::Map<const MatRM<S>> wmat(w.data.data(), cout, patch);
    MatRM<S> out = wmat * cols; // cout x positions, row-major rows are channel planes
    BasicTensor<S> result({cout, oh, ow});
    for (int o = 0; o < cout; ++o)
        result.channel(o) = Eigen::Map<const MatRM<S>>(out.data() + static_cast<int64_t>(o) * positions, oh, ow).array() + b.data[o];
    return result;
}

template <typename S>
BasicTensor<S> relu_fwd(const BasicTensor<S>& in) {
    return BasicTensor<S>(in.shape, in.data.max(S(0)));
}

// argmax_out, when given, receives the flat input index that produced each
// output element (first maximum in (dy, dx) scan order on ties).
template <typename S>
BasicTensor<S> maxpool2d_fwd(const BasicTensor<S>& in, int kernel, int stride, int padding,
                             std::vector<int64_t>* argmax_out = nullptr) {
    const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int oh = conv_out_dim(h, kernel, stride, padding);
    const int ow = conv_out_dim(w, kernel, stride, padding);
    BasicTensor<S> out({c, oh, ow});
    if (argmax_out) argmax_out->assign(static_cast<size_t>(c) * oh * ow, -1);
    for (int k = 0; k < c; ++k) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                S best = -std::numeric_limits<S>::infinity();
                int64_t best_idx = -1;
                for (int dy = 0; dy < kernel; ++dy) {
                    const int iy = oy * stride - padding + dy;
                    if (iy < 0 || iy >= h) continue;
                    for (int dx = 0; dx < kernel; ++dx) {
                        const int ix = ox * stride - padding + dx;
                        if (ix < 0 || ix >= w) continue;
                        const S v = in.at(k, iy, ix);
                        if (v > best) {
                            best = v;
                            best_idx = (static_cast<int64_t>(k) * h + iy) * w + ix;
                        }
                    }
                }
                out.at(k, oy, ox) = best;
                if (argmax_out)
                    (*argmax_out)[(static_cast<size_t>(k) * oh + oy) * ow + ox] = best_idx;
            }
        }
    }
    return out;
}

template <typename S>
BasicTensor<S> avgpool2d_fwd(const BasicTensor<S>& in, int kernel, int stride, int padding) {
    const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int oh = conv_out_dim(h, kernel, stride, padding);
    const int ow = conv_out_dim(w, kernel, stride, padding);
    const double denom = static_cast<double>(kernel) * kernel; // zero padding counts
    BasicTensor<S> out({c, oh, ow});
    for (int k = 0; k < c; ++k) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (int dy = 0; dy < kernel; ++dy) {
                    const int iy = oy * stride - padding + dy;
                    if (iy < 0 || iy >= h) continue;
                    for (int dx = 0; dx < kernel; ++dx) {
                        const int ix = ox * stride - padding + dx;
                        if (ix < 0 || ix >= w) continue;
                        acc += static_cast<double>(in.at(k, iy, ix));
                    }
                }
                out.at(k, oy, ox) = static_cast<S>(acc / denom);
            }
        }
    }
    return out;
}

template <typename S>
BasicTensor<S> global_avg_pool_fwd(const BasicTensor<S>& in) {
    const int c = in.dim(0);
    const int64_t area = static_cast<int64_t>(in.dim(1)) * in.dim(2);
    BasicTensor<S> out({c});
    for (int k = 0; k < c; ++k) {
        double acc = 0.0;
        const S* p = in.data.data() + static_cast<int64_t>(k) * area;
        for (int64_t i = 0; i < area; ++i) acc += static_cast<double>(p[i]);
        out.data[k] = static_cast<S>(acc / static_cast<double>(area));
    }
    return out;
}

template <typename S>
BasicTensor<S> linear_fwd(const BasicTensor<S>& in, const BasicTensor<S>& w,
                          const BasicTensor<S>& b) {
    const int outf = w.dim(0), inf = w.dim(1);
    BasicTensor<S> out({outf});
    const S* x = in.data.data();
    for (int o = 0; o < outf; ++o) {
        double acc = static_cast<double>(b.data[o]);
        const S* row = w.data.data() + static_cast<int64_t>(o) * inf;
        for (int i = 0; i < inf; ++i) acc += static_cast<double>(row[i]) * static_cast<double>(x[i]);
        out.data[o] = static_cast<S>(acc);
    }
    return out;
}

// Numerically stable softmax over a 1-D tensor; exp and the sum run in double.
template <typename S>
BasicTensor<S> softmax_fwd(const BasicTensor<S>& in) {
    const int64_t n = in.size();
    S m = in.data.maxCoeff();
    std::vector<double> e(static_cast<size_t>(n));
    double sum = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        e[static_cast<size_t>(i)] = std::exp(static_cast<double>(in.data[i]) - static_cast<double>(m));
        sum += e[static_cast<size_t>(i)];
    }
    BasicTensor<S> out(in.shape);
    for (int64_t i = 0; i < n; ++i)
        out.data[i] = static_cast<S>(e[static_cast<size_t>(i)] / sum);
    return out;
}

template <typename S>
BasicTensor<S> flatten_fwd(const BasicTensor<S>& in) {
    return BasicTensor<S>({static_cast<int>(in.size())}, in.data);
}

} // namespace rxai::detail
