#include "rxai/saliency.hpp"

#include "rxai/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rxai {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

void check_class(int class_index, int num_classes) {
    if (class_index < 0 || class_index >= num_classes)
        fail("class index " + std::to_string(class_index) + " out of range for " +
             std::to_string(num_classes) + " classes");
}

VecXf logits_1d(const Tensor& out) {
    if (out.rank() != 1)
        fail("head output is not a 1-D logit vector, got " + shape_str(out.shape));
    return out.vec();
}

Tensor channel_plane(const Tensor& feature, int k) {
    Tensor plane({feature.dim(1), feature.dim(2)});
    plane.plane() = feature.channel(k);
    return plane;
}

SaliencyMap weighted_channel_relu_map(const Tensor& feature, const std::vector<double>& weights) {
    const int h = feature.dim(1), w = feature.dim(2);
    TensorD acc({h, w});
    for (int k = 0; k < feature.dim(0); ++k) {
        if (weights[static_cast<size_t>(k)] == 0.0) continue;
        acc.plane() += weights[static_cast<size_t>(k)] * feature.channel(k).cast<double>();
    }
    Tensor raw({h, w}, acc.data.max(0.0).cast<float>());
    return normalize_map(raw);
}

} // namespace

const char* mask_kernel_name(MaskKernel kernel) {
    return kernel == MaskKernel::Dirac ? "dirac" : "gauss3";
}

MaskKernel mask_kernel_from_name(const std::string& name) {
    if (name == "dirac") return MaskKernel::Dirac;
    if (name == "gauss3" || name == "gaussian3x3") return MaskKernel::Gaussian3x3;
    fail("unknown mask kernel '" + name + "' (available: dirac, gauss3)");
}

std::vector<SpatialMask> generate_spatial_masks(int height, int width, MaskKernel kernel) {
    if (height < 1 || width < 1) fail("spatial masks need H >= 1 and W >= 1");
    static constexpr float kStamp[3][3] = {{0.25f, 0.5f, 0.25f},
                                           {0.5f, 1.0f, 0.5f},
                                           {0.25f, 0.5f, 0.25f}};
    std::vector<SpatialMask> masks;
    masks.reserve(static_cast<size_t>(height) * width);
    for (int u = 0; u < height; ++u) {
        for (int v = 0; v < width; ++v) {
            SpatialMask m;
            m.u = u;
            m.v = v;
            m.kernel = kernel;
            m.values = Tensor({height, width});
            if (kernel == MaskKernel::Dirac) {
                m.values.plane()(u, v) = 1.0f;
            } else {
                for (int dy = -1; dy <= 1; ++dy) {
                    const int y = u + dy;
                    if (y < 0 || y >= height) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int x = v + dx;
                        if (x < 0 || x >= width) continue;
                        m.values.plane()(y, x) = kStamp[dy + 1][dx + 1];
                    }
                }
            }
            masks.push_back(std::move(m));
        }
    }
    return masks;
}

SaliencyMap normalize_map(const Tensor& raw) {
    if (raw.rank() != 2) fail("normalize_map: expected an HxW tensor, got " + shape_str(raw.shape));
    SaliencyMap map;
    map.values = Tensor(raw.shape);
    const float lo = raw.data.minCoeff();
    const float hi = raw.data.maxCoeff();
    if (hi == lo) {
        map.degenerate = true; // all zeros, never NaN
        return map;
    }
    map.values.data = (raw.data - lo) / (hi - lo);
    return map;
}

Tensor upsample_map(const SaliencyMap& map, int target_h, int target_w) {
    const int h = map.values.dim(0), w = map.values.dim(1);
    if (target_h < h || target_w < w)
        fail("upsample_map: target " + std::to_string(target_h) + "x" + std::to_string(target_w) +
             " smaller than map " + std::to_string(h) + "x" + std::to_string(w));
    Tensor as3d({1, h, w}, map.values.data);
    Tensor up = resize_bilinear(as3d, target_h, target_w);
    return Tensor({target_h, target_w}, std::move(up.data));
}

// ---------------------------------------------------------------------------
// Instrumented passes.

FullPass run_full(const SplitModel& split, const Tensor& input, CamCost* cost) {
    FullPass fp;
    fp.feature = forward_chain(split.feature_layers(), input);
    if (fp.feature.rank() != 3)
        fail("split feature map is not KxHxW, got " + shape_str(fp.feature.shape));
    fp.logits = logits_1d(forward_chain(peel_softmax(split.head_layers()), fp.feature));
    fp.probs = softmax_vec(fp.logits);
    if (cost) cost->full_forwards += 1;
    return fp;
}

VecXf head_logits(const SplitModel& split, const Tensor& feature, CamCost* cost) {
    VecXf logits = logits_1d(forward_chain(peel_softmax(split.head_layers()), feature));
    if (cost) cost->head_forwards += 1;
    return logits;
}

VecXf model_logits(const Model& model, const Tensor& input, CamCost* cost) {
    VecXf logits = logits_1d(forward_chain(peel_softmax(model.layer_span()), input));
    if (cost) cost->full_forwards += 1;
    return logits;
}

VecXf model_probs(const Model& model, const Tensor& input, CamCost* cost) {
    return softmax_vec(model_logits(model, input, cost));
}

int argmax_class(const VecXf& scores) {
    Eigen::Index best = 0;
    scores.maxCoeff(&best);
    return static_cast<int>(best);
}

// ---------------------------------------------------------------------------
// Generators.

ClassScores recipro_scores(const SplitModel& split, const Tensor& input, int class_index,
                           MaskKernel kernel, CamCost* cost) {
    FullPass fp = run_full(split, input, cost);
    check_class(class_index, static_cast<int>(fp.probs.size()));
    const int h = fp.feature.dim(1), w = fp.feature.dim(2);

    const auto masks = generate_spatial_masks(h, w, kernel);
    std::vector<Tensor> masked;
    masked.reserve(masks.size());
    for (const SpatialMask& m : masks) masked.push_back(hadamard(fp.feature, m.values));

    // One batched head call over the N masked maps.
    const auto head = peel_softmax(split.head_layers());
    std::vector<Tensor> outputs = forward_chain_batch(head, masked);
    if (cost) cost->head_forwards += static_cast<long>(outputs.size());

    ClassScores scores;
    scores.values.resize(static_cast<Eigen::Index>(outputs.size()));
    for (size_t n = 0; n < outputs.size(); ++n)
        scores.values[static_cast<Eigen::Index>(n)] =
            softmax_vec(logits_1d(outputs[n]))[class_index];
    return scores;
}

SaliencyMap recipro_cam(const SplitModel& split, const Tensor& input, int class_index,
                        MaskKernel kernel, CamCost* cost) {
    const auto shape = split.feature_shape();
    ClassScores scores = recipro_scores(split, input, class_index, kernel, cost);
    SaliencyMap map = normalize_map(Tensor({shape[1], shape[2]}, scores.values.array()));
    map.method = kernel == MaskKernel::Dirac ? "recipro" : "recipro-gauss3";
    map.class_index = class_index;
    map.split_index = split.split_index;
    return map;
}

SaliencyMap cam(const Model& model, const Tensor& input, int class_index, CamCost* cost) {
    const auto layers = peel_softmax(model.layer_span());
    const size_t n = layers.size();
    if (n < 2 || layers[n - 1].kind != LayerKind::Linear ||
        layers[n - 2].kind != LayerKind::GlobalAvgPool)
        fail("CAM requires a global average pooling layer feeding the final linear head; "
             "model '" + model.name + "' has no such head (use grad/score/ablation/recipro instead)");
    const LayerSpec& fc = layers[n - 1];
    check_class(class_index, fc.out_features);

    Tensor feature = forward_chain(layers.first(n - 2), input);
    if (feature.rank() != 3)
        fail("CAM: tensor entering global_avg_pool is not KxHxW, got " + shape_str(feature.shape));
    if (feature.dim(0) != fc.in_features)
        fail("CAM: feature has " + std::to_string(feature.dim(0)) + " channels but linear expects " +
             std::to_string(fc.in_features));
    // finish the pass so the cost is one well-defined full forward
    (void)forward_chain(layers.subspan(n - 2), feature);
    if (cost) cost->full_forwards += 1;

    const int k = feature.dim(0), h = feature.dim(1), w = feature.dim(2);
    TensorD acc({h, w});
    const float* wrow = fc.weights->data.data() + static_cast<int64_t>(class_index) * k;
    for (int c = 0; c < k; ++c)
        acc.plane() += static_cast<double>(wrow[c]) * feature.channel(c).cast<double>();

    SaliencyMap map = normalize_map(Tensor({h, w}, acc.data.cast<float>()));
    map.method = "cam";
    map.class_index = class_index;
    map.split_index = static_cast<int>(n - 2);
    return map;
}

SaliencyMap grad_cam(const SplitModel& split, const Tensor& input, int class_index,
                     CamCost* cost) {
    FullPass fp = run_full(split, input, cost);
    check_class(class_index, static_cast<int>(fp.logits.size()));

    Gradient grad = backward_head(split.head_layers(), fp.feature, class_index);
    if (cost) cost->backward_passes += 1;

    const int k = fp.feature.dim(0);
    const int64_t area = static_cast<int64_t>(fp.feature.dim(1)) * fp.feature.dim(2);
    std::vector<double> alpha(static_cast<size_t>(k));
    for (int c = 0; c < k; ++c) {
        double acc = 0.0;
        const float* g = grad.values.data.data() + static_cast<int64_t>(c) * area;
        for (int64_t i = 0; i < area; ++i) acc += static_cast<double>(g[i]);
        alpha[static_cast<size_t>(c)] = acc / static_cast<double>(area);
    }
    SaliencyMap map = weighted_channel_relu_map(fp.feature, alpha);
    map.method = "grad";
    map.class_index = class_index;
    map.split_index = split.split_index;
    return map;
}

SaliencyMap score_cam(const Model& model, const SplitModel& split, const Tensor& input,
                      int class_index, CamCost* cost) {
    FullPass fp = run_full(split, input, cost);
    check_class(class_index, static_cast<int>(fp.logits.size()));
    const int k = fp.feature.dim(0);
    const int in_h = input.dim(1), in_w = input.dim(2);

    // Per channel: upsample the activation to input size, normalize to [0,1],
    // mask the input image and run a full forward. Degenerate (constant)
    // channels get weight 0; their forward still runs so the cost contract
    // stays exactly K+1 full passes.
    std::vector<double> logit(static_cast<size_t>(k), 0.0);
    std::vector<bool> included(static_cast<size_t>(k), false);
    for (int c = 0; c < k; ++c) {
        SaliencyMap norm = normalize_map(channel_plane(fp.feature, c));
        Tensor up({in_h, in_w});
        if (!norm.degenerate) up = upsample_map(norm, in_h, in_w);
        Tensor masked = hadamard(input, up);
        const VecXf logits = model_logits(model, masked, cost);
        logit[static_cast<size_t>(c)] = logits[class_index];
        included[static_cast<size_t>(c)] = !norm.degenerate;
    }

    // Softmax over the logits of the included channels.
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
        if (included[static_cast<size_t>(c)]) max_logit = std::max(max_logit, logit[static_cast<size_t>(c)]);
    std::vector<double> weight(static_cast<size_t>(k), 0.0);
    double sum = 0.0;
    for (int c = 0; c < k; ++c) {
        if (!included[static_cast<size_t>(c)]) continue;
        weight[static_cast<size_t>(c)] = std::exp(logit[static_cast<size_t>(c)] - max_logit);
        sum += weight[static_cast<size_t>(c)];
    }
    if (sum > 0.0)
        for (double& w : weight) w /= sum;

    SaliencyMap map = weighted_channel_relu_map(fp.feature, weight);
    map.method = "score";
    map.class_index = class_index;
    map.split_index = split.split_index;
    return map;
}

SaliencyMap ablation_cam(const SplitModel& split, const Tensor& input, int class_index,
                         CamCost* cost) {
    FullPass fp = run_full(split, input, cost);
    check_class(class_index, static_cast<int>(fp.logits.size()));
    const int k = fp.feature.dim(0);

    const double baseline = head_logits(split, fp.feature, cost)[class_index];
    std::vector<double> slope(static_cast<size_t>(k), 0.0);
    Tensor ablated = fp.feature;
    for (int c = 0; c < k; ++c) {
        ablated.channel(c).setZero();
        const double dropped = head_logits(split, ablated, cost)[class_index];
        ablated.channel(c) = fp.feature.channel(c); // restore
        if (std::abs(baseline) >= 1e-8)
            slope[static_cast<size_t>(c)] = (baseline - dropped) / baseline;
    }

    SaliencyMap map = weighted_channel_relu_map(fp.feature, slope);
    map.method = "ablation";
    map.class_index = class_index;
    map.split_index = split.split_index;
    return map;
}

SaliencyMap fake_cam(int height, int width) {
    if (height < 1 || width < 1) fail("fake_cam needs H >= 1 and W >= 1");
    SaliencyMap map;
    map.method = "fake";
    map.values = Tensor({height, width});
    if (height * width == 1) {
        map.degenerate = true; // a single pixel cannot hold both 0 and 1
        return map;
    }
    map.values.data.setOnes();
    map.values.plane()(0, 0) = 0.0f;
    return map;
}

// ---------------------------------------------------------------------------

const char* method_name(Method method) {
    switch (method) {
        case Method::Recipro: return "recipro";
        case Method::Cam: return "cam";
        case Method::Grad: return "grad";
        case Method::Score: return "score";
        case Method::Ablation: return "ablation";
        case Method::Fake: return "fake";
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    if (name == "recipro") return Method::Recipro;
    if (name == "cam") return Method::Cam;
    if (name == "grad") return Method::Grad;
    if (name == "score") return Method::Score;
    if (name == "ablation") return Method::Ablation;
    if (name == "fake") return Method::Fake;
    fail("unknown method '" + name + "' (available: recipro, cam, grad, score, ablation, fake)");
}

std::vector<Method> parse_method_list(const std::string& comma_separated) {
    std::vector<Method> methods;
    size_t start = 0;
    while (start <= comma_separated.size()) {
        size_t end = comma_separated.find(',', start);
        if (end == std::string::npos) end = comma_separated.size();
        const std::string token = comma_separated.substr(start, end - start);
        if (!token.empty()) methods.push_back(method_from_name(token));
        start = end + 1;
    }
    if (methods.empty()) fail("empty method list");
    return methods;
}

SaliencyMap generate_map(Method method, const Model& model, const SplitModel& split,
                         const Tensor& input, int class_index, MaskKernel kernel, CamCost* cost) {
    switch (method) {
        case Method::Recipro: return recipro_cam(split, input, class_index, kernel, cost);
        case Method::Cam: return cam(model, input, class_index, cost);
        case Method::Grad: return grad_cam(split, input, class_index, cost);
        case Method::Score: return score_cam(model, split, input, class_index, cost);
        case Method::Ablation: return ablation_cam(split, input, class_index, cost);
        case Method::Fake: {
            SaliencyMap map = fake_cam(input.dim(1), input.dim(2));
            map.class_index = class_index;
            return map;
        }
    }
    fail("unhandled method");
}

} // namespace rxai
