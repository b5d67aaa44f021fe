#pragma once

#include "rxai/tensor.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rxai {

enum class LayerKind {
    Conv2d,
    Relu,
    MaxPool2d,
    AvgPool2d,
    GlobalAvgPool,
    Linear,
    Softmax,
    Flatten,
};

const char* layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

/// One layer of a network. Weight layout: conv2d {out, in, k, k}, linear
/// {out_features, in_features}; bias {out}. Linear flattens its input and
/// requires the total element count to equal in_features.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int kernel = 0;
    int stride = 1;
    int padding = 0;
    int in_channels = 0;
    int out_channels = 0;
    int in_features = 0;
    int out_features = 0;
    std::optional<Tensor> weights;
    std::optional<Tensor> bias;

    static LayerSpec conv2d(int in_ch, int out_ch, int kernel, int stride = 1, int padding = 0);
    static LayerSpec relu() { return of_kind(LayerKind::Relu); }
    static LayerSpec maxpool2d(int kernel, int stride);
    static LayerSpec avgpool2d(int kernel, int stride);
    static LayerSpec global_avg_pool() { return of_kind(LayerKind::GlobalAvgPool); }
    static LayerSpec linear(int in_features, int out_features);
    static LayerSpec softmax() { return of_kind(LayerKind::Softmax); }
    static LayerSpec flatten() { return of_kind(LayerKind::Flatten); }
    static LayerSpec of_kind(LayerKind k) {
        LayerSpec l;
        l.kind = k;
        return l;
    }

    /// Validates hyperparameters and weight shapes; throws std::invalid_argument.
    void validate() const;
    int64_t parameter_count() const;
};

/// Output shape for the given input shape; throws on incompatibility.
std::vector<int> layer_output_shape(const LayerSpec& layer, std::span<const int> in_shape);

Tensor forward_layer(const LayerSpec& layer, const Tensor& input);

/// Left-to-right fold of forward_layer. Errors are rethrown with the
/// offending layer index and kind prepended.
Tensor forward_chain(std::span<const LayerSpec> layers, const Tensor& input);

/// Pushes a stack of inputs through the same chain in one call. Each sample
/// goes through the identical per-sample kernels, so the result matches a
/// caller-side loop bit for bit.
std::vector<Tensor> forward_chain_batch(std::span<const LayerSpec> layers,
                                        std::span<const Tensor> inputs);

/// d y_c / d feature for the pre-softmax logit y_c of the given class.
struct Gradient {
    Tensor values; // same shape as the feature map the head was applied to
};

/// Reverse-mode gradient of the class logit through the head layers with
/// respect to `feature`. A single trailing softmax layer is excluded from the
/// differentiated function (the logit feeding it is differentiated instead).
/// Maxpool routes to the first maximal element in scan order on ties; relu
/// has slope 0 at exactly 0.
Gradient backward_head(std::span<const LayerSpec> head, const Tensor& feature, int class_index);

/// Central-difference gradient of the same class logit, evaluated with the
/// whole head promoted to double precision so the quotient is not drowned by
/// float storage rounding.
Gradient finite_diff_grad(std::span<const LayerSpec> head, const Tensor& feature,
                          int class_index, double epsilon = 1e-3);

/// Softmax kernel shared with the Softmax layer (max-subtracted, double sum).
VecXf softmax_vec(const VecXf& logits);

/// True if the last layer is a softmax.
bool ends_with_softmax(std::span<const LayerSpec> layers);

/// Layers with a single trailing softmax removed, if present.
std::span<const LayerSpec> peel_softmax(std::span<const LayerSpec> layers);

} // namespace rxai
