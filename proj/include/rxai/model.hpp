#pragma once

#include "rxai/layers.hpp"
#include "rxai/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rxai {

/// Ordered layer graph with a fixed input shape. Immutable after load; safe
/// to share across threads.
struct Model {
    std::string name;
    std::vector<LayerSpec> layers;
    std::vector<int> input_shape; // {C, H, W}
    std::vector<std::string> class_names;

    std::span<const LayerSpec> layer_span() const { return {layers.data(), layers.size()}; }
    bool has_trailing_softmax() const { return ends_with_softmax(layer_span()); }

    /// Number of output classes (size of the final logit vector).
    int num_classes() const;

    /// Runs the whole-model shape check (zeros through every layer); throws
    /// with the offending layer on inconsistency.
    void check_shapes() const;

    int64_t parameter_count() const;
};

/// Network divided at a layer boundary: feature extractor f = layers[0, split)
/// and head g = layers[split, end). The boundary tensor f(I) must be KxHxW.
struct SplitModel {
    Model model;
    int split_index = 0;

    std::span<const LayerSpec> feature_layers() const {
        return model.layer_span().first(static_cast<size_t>(split_index));
    }
    std::span<const LayerSpec> head_layers() const {
        return model.layer_span().subspan(static_cast<size_t>(split_index));
    }
    /// Shape {K, H, W} of the boundary feature map.
    std::vector<int> feature_shape() const;
};

/// Layer indices s for which layers[0, s) ends in a KxHxW tensor.
std::vector<int> valid_split_points(const Model& model);

SplitModel split_model(const Model& model, int split_index);

/// Manifest (JSON, UTF-8) plus raw little-endian float32 blob with magic
/// "RXAIW001". See docs/formats.md for the exact layout.
Model load_model(const std::string& manifest_path);
void save_model(const Model& model, const std::string& manifest_path,
                const std::string& weights_path);

/// Deterministic desk-scale models. Presets: "tiny8" (8 layers, 3x32x32 in,
/// final feature 16x4x4, 10 classes) and "mid16" (16 layers, 3x64x64 in,
/// final feature 64x8x8, 10 classes, trailing softmax). Identical
/// (seed, preset) gives bit-identical weights on every platform.
Model make_reference_model(uint64_t seed, const std::string& preset);

/// Uniform [0,1) tensor of the model's input shape, from the documented
/// SplitMix64 stream.
Tensor seeded_input(const Model& model, uint64_t seed);

} // namespace rxai
