#include "rxai/layers.hpp"

#include "rxai/kernels.hpp"

#include <stdexcept>

namespace rxai {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void require_3d(const LayerSpec& layer, const Tensor& input) {
    if (input.rank() != 3)
        fail(std::string(layer_kind_name(layer.kind)) + ": expected a KxHxW input, got " +
             shape_str(input.shape));
}

} // namespace

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2d: return "maxpool2d";
        case LayerKind::AvgPool2d: return "avgpool2d";
        case LayerKind::GlobalAvgPool: return "global_avg_pool";
        case LayerKind::Linear: return "linear";
        case LayerKind::Softmax: return "softmax";
        case LayerKind::Flatten: return "flatten";
    }
    return "unknown";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "conv2d") return LayerKind::Conv2d;
    if (name == "relu") return LayerKind::Relu;
    if (name == "maxpool2d") return LayerKind::MaxPool2d;
    if (name == "avgpool2d") return LayerKind::AvgPool2d;
    if (name == "global_avg_pool") return LayerKind::GlobalAvgPool;
    if (name == "linear") return LayerKind::Linear;
    if (name == "softmax") return LayerKind::Softmax;
    if (name == "flatten") return LayerKind::Flatten;
    fail("unknown layer kind '" + name + "'");
}

LayerSpec LayerSpec::conv2d(int in_ch, int out_ch, int kernel, int stride, int padding) {
    LayerSpec l;
    l.kind = LayerKind::Conv2d;
    l.in_channels = in_ch;
    l.out_channels = out_ch;
    l.kernel = kernel;
    l.stride = stride;
    l.padding = padding;
    l.weights = Tensor({out_ch, in_ch, kernel, kernel});
    l.bias = Tensor({out_ch});
    return l;
}

LayerSpec LayerSpec::maxpool2d(int kernel, int stride) {
    LayerSpec l;
    l.kind = LayerKind::MaxPool2d;
    l.kernel = kernel;
    l.stride = stride;
    return l;
}

LayerSpec LayerSpec::avgpool2d(int kernel, int stride) {
    LayerSpec l;
    l.kind = LayerKind::AvgPool2d;
    l.kernel = kernel;
    l.stride = stride;
    return l;
}

LayerSpec LayerSpec::linear(int in_features, int out_features) {
    LayerSpec l;
    l.kind = LayerKind::Linear;
    l.in_features = in_features;
    l.out_features = out_features;
    l.weights = Tensor({out_features, in_features});
    l.bias = Tensor({out_features});
    return l;
}

void LayerSpec::validate() const {
    const std::string name = layer_kind_name(kind);
    switch (kind) {
        case LayerKind::Conv2d: {
            if (kernel < 1 || stride < 1 || padding < 0)
                fail(name + ": kernel >= 1, stride >= 1, padding >= 0 required");
            if (in_channels < 1 || out_channels < 1) fail(name + ": channel counts must be positive");
            const std::vector<int> want{out_channels, in_channels, kernel, kernel};
            if (!weights || weights->shape != want)
                fail(name + ": weight shape " + (weights ? shape_str(weights->shape) : "absent") +
                     ", expected " + shape_str(want));
            if (!bias || bias->shape != std::vector<int>{out_channels})
                fail(name + ": bias shape mismatch, expected " + std::to_string(out_channels));
            break;
        }
        case LayerKind::MaxPool2d:
        case LayerKind::AvgPool2d:
            if (kernel < 1 || stride < 1 || padding < 0)
                fail(name + ": kernel >= 1, stride >= 1, padding >= 0 required");
            if (padding >= kernel) fail(name + ": padding must be smaller than kernel");
            break;
        case LayerKind::Linear: {
            if (in_features < 1 || out_features < 1) fail(name + ": feature counts must be positive");
            const std::vector<int> want{out_features, in_features};
            if (!weights || weights->shape != want)
                fail(name + ": weight shape " + (weights ? shape_str(weights->shape) : "absent") +
                     ", expected " + shape_str(want));
            if (!bias || bias->shape != std::vector<int>{out_features})
                fail(name + ": bias shape mismatch, expected " + std::to_string(out_features));
            break;
        }
        default:
            break;
    }
}

int64_t LayerSpec::parameter_count() const {
    int64_t n = 0;
    if (weights) n += weights->size();
    if (bias) n += bias->size();
    return n;
}

std::vector<int> layer_output_shape(const LayerSpec& layer, std::span<const int> in_shape) {
    const std::string name = layer_kind_name(layer.kind);
    auto spatial_out = [&](int in) {
        const int out = detail::conv_out_dim(in, layer.kernel, layer.stride, layer.padding);
        if (out < 1)
            fail(name + ": input " + shape_str(in_shape) + " too small for kernel " +
                 std::to_string(layer.kernel) + " stride " + std::to_string(layer.stride));
        return out;
    };
    switch (layer.kind) {
        case LayerKind::Conv2d: {
            if (in_shape.size() != 3)
                fail(name + ": expected a KxHxW input, got " + shape_str(in_shape));
            if (in_shape[0] != layer.in_channels)
                fail(name + ": input has " + std::to_string(in_shape[0]) + " channels, layer expects " +
                     std::to_string(layer.in_channels));
            return {layer.out_channels, spatial_out(in_shape[1]), spatial_out(in_shape[2])};
        }
        case LayerKind::MaxPool2d:
        case LayerKind::AvgPool2d: {
            if (in_shape.size() != 3)
                fail(name + ": expected a KxHxW input, got " + shape_str(in_shape));
            return {in_shape[0], spatial_out(in_shape[1]), spatial_out(in_shape[2])};
        }
        case LayerKind::GlobalAvgPool:
            if (in_shape.size() != 3)
                fail(name + ": expected a KxHxW input, got " + shape_str(in_shape));
            return {in_shape[0]};
        case LayerKind::Linear: {
            const int64_t total = Tensor::count(in_shape);
            if (total != layer.in_features)
                fail(name + ": input " + shape_str(in_shape) + " has " + std::to_string(total) +
                     " values, layer expects " + std::to_string(layer.in_features));
            return {layer.out_features};
        }
        case LayerKind::Softmax:
            if (in_shape.size() != 1)
                fail(name + ": expected a 1-D input, got " + shape_str(in_shape));
            return {in_shape[0]};
        case LayerKind::Relu:
            return std::vector<int>(in_shape.begin(), in_shape.end());
        case LayerKind::Flatten:
            return {static_cast<int>(Tensor::count(in_shape))};
    }
    fail("unhandled layer kind");
}

Tensor forward_layer(const LayerSpec& layer, const Tensor& input) {
    layer_output_shape(layer, input.shape); // shape/validity gate
    switch (layer.kind) {
        case LayerKind::Conv2d:
            return detail::conv2d_fwd(input, *layer.weights, *layer.bias, layer.stride, layer.padding);
        case LayerKind::Relu:
            return detail::relu_fwd(input);
        case LayerKind::MaxPool2d:
            return detail::maxpool2d_fwd(input, layer.kernel, layer.stride, layer.padding);
        case LayerKind::AvgPool2d:
            return detail::avgpool2d_fwd(input, layer.kernel, layer.stride, layer.padding);
        case LayerKind::GlobalAvgPool:
            return detail::global_avg_pool_fwd(input);
        case LayerKind::Linear: {
            Tensor flat({layer.in_features}, input.data);
            return detail::linear_fwd(flat, *layer.weights, *layer.bias);
        }
        case LayerKind::Softmax:
            return detail::softmax_fwd(input);
        case LayerKind::Flatten:
            return detail::flatten_fwd(input);
    }
    fail("unhandled layer kind");
}

Tensor forward_chain(std::span<const LayerSpec> layers, const Tensor& input) {
    Tensor x = input;
    for (size_t i = 0; i < layers.size(); ++i) {
        try {
            x = forward_layer(layers[i], x);
        } catch (const std::exception& e) {
            throw std::invalid_argument("layer " + std::to_string(i) + " (" +
                                        layer_kind_name(layers[i].kind) + "): " + e.what());
        }
    }
    return x;
}

std::vector<Tensor> forward_chain_batch(std::span<const LayerSpec> layers,
                                        std::span<const Tensor> inputs) {
    std::vector<Tensor> out;
    out.reserve(inputs.size());
    for (const Tensor& x : inputs) out.push_back(forward_chain(layers, x));
    return out;
}

bool ends_with_softmax(std::span<const LayerSpec> layers) {
    return !layers.empty() && layers.back().kind == LayerKind::Softmax;
}

std::span<const LayerSpec> peel_softmax(std::span<const LayerSpec> layers) {
    return ends_with_softmax(layers) ? layers.first(layers.size() - 1) : layers;
}

VecXf softmax_vec(const VecXf& logits) {
    Tensor t({static_cast<int>(logits.size())}, logits.array());
    return detail::softmax_fwd(t).vec();
}

// ---------------------------------------------------------------------------
// Reverse mode through the head.

namespace {

Tensor conv2d_bwd(const LayerSpec& layer, const Tensor& input, const Tensor& dout) {
    const Tensor& w = *layer.weights;
    const int cin = input.dim(0), h = input.dim(1), wd = input.dim(2);
    const int cout = dout.dim(0), oh = dout.dim(1), ow = dout.dim(2);
    const int kh = w.dim(2), kw = w.dim(3);
    TensorD acc(input.shape);
    for (int o = 0; o < cout; ++o) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const double g = static_cast<double>(dout.at(o, oy, ox));
                if (g == 0.0) continue;
                for (int c = 0; c < cin; ++c) {
                    const float* wrow = w.data.data() + ((static_cast<int64_t>(o) * cin + c) * kh) * kw;
                    for (int dy = 0; dy < kh; ++dy) {
                        const int iy = oy * layer.stride - layer.padding + dy;
                        if (iy < 0 || iy >= h) continue;
                        for (int dx = 0; dx < kw; ++dx) {
                            const int ix = ox * layer.stride - layer.padding + dx;
                            if (ix < 0 || ix >= wd) continue;
                            acc.at(c, iy, ix) += g * static_cast<double>(wrow[dy * kw + dx]);
                        }
                    }
                }
            }
        }
    }
    return acc.cast<float>();
}

Tensor linear_bwd(const LayerSpec& layer, const Tensor& input, const Tensor& dout) {
    const Tensor& w = *layer.weights;
    const int outf = w.dim(0), inf = w.dim(1);
    TensorD acc({inf});
    for (int o = 0; o < outf; ++o) {
        const double g = static_cast<double>(dout.data[o]);
        if (g == 0.0) continue;
        const float* row = w.data.data() + static_cast<int64_t>(o) * inf;
        for (int i = 0; i < inf; ++i) acc.data[i] += g * static_cast<double>(row[i]);
    }
    Tensor dx = acc.cast<float>();
    dx.shape = input.shape;
    return dx;
}

Tensor maxpool2d_bwd(const LayerSpec& layer, const Tensor& input, const Tensor& dout) {
    std::vector<int64_t> argmax;
    detail::maxpool2d_fwd(input, layer.kernel, layer.stride, layer.padding, &argmax);
    TensorD acc(input.shape);
    for (int64_t i = 0; i < dout.size(); ++i)
        acc.data[argmax[static_cast<size_t>(i)]] += static_cast<double>(dout.data[i]);
    return acc.cast<float>();
}

Tensor avgpool2d_bwd(const LayerSpec& layer, const Tensor& input, const Tensor& dout) {
    const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int oh = dout.dim(1), ow = dout.dim(2);
    const double denom = static_cast<double>(layer.kernel) * layer.kernel;
    TensorD acc(input.shape);
    for (int k = 0; k < c; ++k) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const double g = static_cast<double>(dout.at(k, oy, ox)) / denom;
                for (int dy = 0; dy < layer.kernel; ++dy) {
                    const int iy = oy * layer.stride - layer.padding + dy;
                    if (iy < 0 || iy >= h) continue;
                    for (int dx = 0; dx < layer.kernel; ++dx) {
                        const int ix = ox * layer.stride - layer.padding + dx;
                        if (ix < 0 || ix >= w) continue;
                        acc.at(k, iy, ix) += g;
                    }
                }
            }
        }
    }
    return acc.cast<float>();
}

Tensor gap_bwd(const Tensor& input, const Tensor& dout) {
    const int c = input.dim(0);
    const int64_t area = static_cast<int64_t>(input.dim(1)) * input.dim(2);
    Tensor dx(input.shape);
    for (int k = 0; k < c; ++k) {
        const float g = static_cast<float>(static_cast<double>(dout.data[k]) / static_cast<double>(area));
        dx.channel(k).setConstant(g);
    }
    return dx;
}

Tensor softmax_bwd(const Tensor& output, const Tensor& dout) {
    // dx_i = s_i * (g_i - sum_j g_j s_j)
    double dot = 0.0;
    for (int64_t i = 0; i < output.size(); ++i)
        dot += static_cast<double>(dout.data[i]) * static_cast<double>(output.data[i]);
    Tensor dx(output.shape);
    for (int64_t i = 0; i < output.size(); ++i)
        dx.data[i] = static_cast<float>(static_cast<double>(output.data[i]) *
                                        (static_cast<double>(dout.data[i]) - dot));
    return dx;
}

Tensor backward_layer(const LayerSpec& layer, const Tensor& input, const Tensor& output,
                      const Tensor& dout) {
    switch (layer.kind) {
        case LayerKind::Conv2d: return conv2d_bwd(layer, input, dout);
        case LayerKind::Relu: {
            Tensor dx(input.shape);
            for (int64_t i = 0; i < input.size(); ++i)
                dx.data[i] = input.data[i] > 0.0f ? dout.data[i] : 0.0f;
            return dx;
        }
        case LayerKind::MaxPool2d: return maxpool2d_bwd(layer, input, dout);
        case LayerKind::AvgPool2d: return avgpool2d_bwd(layer, input, dout);
        case LayerKind::GlobalAvgPool: return gap_bwd(input, dout);
        case LayerKind::Linear: return linear_bwd(layer, input, dout);
        case LayerKind::Softmax: return softmax_bwd(output, dout);
        case LayerKind::Flatten: {
            Tensor dx = dout;
            dx.shape = input.shape;
            return dx;
        }
    }
    throw std::invalid_argument(std::string("backward: non-differentiable layer kind ") +
                                layer_kind_name(layer.kind));
}

void check_class_index(const Tensor& logits, int class_index) {
    if (logits.rank() != 1)
        throw std::invalid_argument("head output is not a 1-D logit vector, got " +
                                    shape_str(logits.shape));
    if (class_index < 0 || class_index >= logits.dim(0))
        throw std::out_of_range("class index " + std::to_string(class_index) +
                                " out of range for " + std::to_string(logits.dim(0)) + " classes");
}

} // namespace

Gradient backward_head(std::span<const LayerSpec> head, const Tensor& feature, int class_index) {
    const auto layers = peel_softmax(head);
    std::vector<Tensor> acts;
    acts.reserve(layers.size() + 1);
    acts.push_back(feature);
    for (size_t i = 0; i < layers.size(); ++i) {
        try {
            acts.push_back(forward_layer(layers[i], acts.back()));
        } catch (const std::exception& e) {
            throw std::invalid_argument("head layer " + std::to_string(i) + " (" +
                                        layer_kind_name(layers[i].kind) + "): " + e.what());
        }
    }
    check_class_index(acts.back(), class_index);

    Tensor grad(acts.back().shape);
    grad.data[class_index] = 1.0f;
    for (size_t i = layers.size(); i-- > 0;)
        grad = backward_layer(layers[i], acts[i], acts[i + 1], grad);
    return Gradient{std::move(grad)};
}

Gradient finite_diff_grad(std::span<const LayerSpec> head, const Tensor& feature,
                          int class_index, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("finite_diff_grad: epsilon must be positive");
    const auto layers = peel_softmax(head);

    // Each probe evaluates the head entirely in double.
    auto eval = [&](const TensorD& x) -> double {
        TensorD cur = x;
        for (const LayerSpec& l : layers) {
            switch (l.kind) {
                case LayerKind::Conv2d:
                    cur = detail::conv2d_fwd(cur, l.weights->cast<double>(), l.bias->cast<double>(),
                                             l.stride, l.padding);
                    break;
                case LayerKind::Relu: cur = detail::relu_fwd(cur); break;
                case LayerKind::MaxPool2d:
                    cur = detail::maxpool2d_fwd(cur, l.kernel, l.stride, l.padding);
                    break;
                case LayerKind::AvgPool2d:
                    cur = detail::avgpool2d_fwd(cur, l.kernel, l.stride, l.padding);
                    break;
                case LayerKind::GlobalAvgPool: cur = detail::global_avg_pool_fwd(cur); break;
                case LayerKind::Linear: {
                    TensorD flat({l.in_features}, cur.data);
                    cur = detail::linear_fwd(flat, l.weights->cast<double>(), l.bias->cast<double>());
                    break;
                }
                case LayerKind::Softmax: cur = detail::softmax_fwd(cur); break;
                case LayerKind::Flatten: cur = detail::flatten_fwd(cur); break;
            }
        }
        return cur.data[class_index];
    };

    {
        // validate shape compatibility and class index up front
        Tensor probe = forward_chain(layers, feature);
        check_class_index(probe, class_index);
    }

    TensorD base = feature.cast<double>();
    Tensor grad(feature.shape);
    for (int64_t i = 0; i < base.size(); ++i) {
        const double saved = base.data[i];
        base.data[i] = saved + epsilon;
        const double up = eval(base);
        base.data[i] = saved - epsilon;
        const double down = eval(base);
        base.data[i] = saved;
        grad.data[i] = static_cast<float>((up - down) / (2.0 * epsilon));
    }
    return Gradient{std::move(grad)};
}

} // namespace rxai
