#include "rxai/model.hpp"

#include "rxai/prng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace rxai {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'R', 'X', 'A', 'I', 'W', '0', '0', '1'};

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::vector<int> chain_output_shape(std::span<const LayerSpec> layers, std::vector<int> shape) {
    for (size_t i = 0; i < layers.size(); ++i) {
        try {
            shape = layer_output_shape(layers[i], shape);
        } catch (const std::exception& e) {
            throw std::runtime_error("layer " + std::to_string(i) + " (" +
                                     layer_kind_name(layers[i].kind) + "): " + e.what());
        }
    }
    return shape;
}

} // namespace

int Model::num_classes() const {
    const auto out = chain_output_shape(layer_span(), input_shape);
    if (out.size() != 1)
        fail("model '" + name + "' does not end in a 1-D output, got " + shape_str(out));
    return out[0];
}

void Model::check_shapes() const {
    if (input_shape.size() != 3)
        fail("model '" + name + "': input shape must be CxHxW, got " + shape_str(input_shape));
    for (size_t i = 0; i < layers.size(); ++i) {
        try {
            layers[i].validate();
        } catch (const std::exception& e) {
            fail("model '" + name + "', layer " + std::to_string(i) + ": " + e.what());
        }
    }
    try {
        chain_output_shape(layer_span(), input_shape);
    } catch (const std::exception& e) {
        fail("model '" + name + "': shape check failed: " + e.what());
    }
}

int64_t Model::parameter_count() const {
    int64_t n = 0;
    for (const LayerSpec& l : layers) n += l.parameter_count();
    return n;
}

std::vector<int> SplitModel::feature_shape() const {
    return chain_output_shape(feature_layers(), model.input_shape);
}

std::vector<int> valid_split_points(const Model& model) {
    std::vector<int> points;
    std::vector<int> shape = model.input_shape;
    for (size_t i = 0; i < model.layers.size(); ++i) {
        shape = layer_output_shape(model.layers[i], shape);
        const int split = static_cast<int>(i) + 1;
        if (shape.size() == 3 && split < static_cast<int>(model.layers.size()))
            points.push_back(split);
    }
    return points;
}

SplitModel split_model(const Model& model, int split_index) {
    const int n = static_cast<int>(model.layers.size());
    if (split_index <= 0 || split_index >= n)
        fail("split index " + std::to_string(split_index) + " outside (0, " + std::to_string(n) +
             "); the feature net and head must both be nonempty");
    std::vector<int> shape = model.input_shape;
    for (int i = 0; i < split_index; ++i)
        shape = layer_output_shape(model.layers[i], shape);
    if (shape.size() != 3) {
        std::string pts;
        for (int p : valid_split_points(model)) pts += (pts.empty() ? "" : ", ") + std::to_string(p);
        fail("split index " + std::to_string(split_index) + " has a " + shape_str(shape) +
             " boundary tensor, need KxHxW; valid split points: [" + pts + "]");
    }
    return SplitModel{model, split_index};
}

// ---------------------------------------------------------------------------
// On-disk format.

namespace {

json layer_to_json(const LayerSpec& l, int64_t& offset) {
    json j;
    j["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
        case LayerKind::Conv2d:
            j["in_channels"] = l.in_channels;
            j["out_channels"] = l.out_channels;
            j["kernel"] = l.kernel;
            j["stride"] = l.stride;
            j["padding"] = l.padding;
            break;
        case LayerKind::MaxPool2d:
        case LayerKind::AvgPool2d:
            j["kernel"] = l.kernel;
            j["stride"] = l.stride;
            j["padding"] = l.padding;
            break;
        case LayerKind::Linear:
            j["in_features"] = l.in_features;
            j["out_features"] = l.out_features;
            break;
        default:
            break;
    }
    if (l.weights) {
        j["weights"] = {{"offset", offset}, {"count", l.weights->size()}};
        offset += l.weights->size();
    }
    if (l.bias) {
        j["bias"] = {{"offset", offset}, {"count", l.bias->size()}};
        offset += l.bias->size();
    }
    return j;
}

LayerSpec layer_from_json(const json& j) {
    LayerSpec l;
    l.kind = layer_kind_from_name(j.at("kind").get<std::string>());
    switch (l.kind) {
        case LayerKind::Conv2d:
            l = LayerSpec::conv2d(j.at("in_channels").get<int>(), j.at("out_channels").get<int>(),
                                  j.at("kernel").get<int>(), j.value("stride", 1),
                                  j.value("padding", 0));
            break;
        case LayerKind::MaxPool2d:
            l = LayerSpec::maxpool2d(j.at("kernel").get<int>(), j.at("stride").get<int>());
            l.padding = j.value("padding", 0);
            break;
        case LayerKind::AvgPool2d:
            l = LayerSpec::avgpool2d(j.at("kernel").get<int>(), j.at("stride").get<int>());
            l.padding = j.value("padding", 0);
            break;
        case LayerKind::Linear:
            l = LayerSpec::linear(j.at("in_features").get<int>(), j.at("out_features").get<int>());
            break;
        default:
            break;
    }
    return l;
}

void read_blob_into(const json& slot, std::span<const float> payload, Tensor& dst,
                    const std::string& what) {
    const int64_t offset = slot.at("offset").get<int64_t>();
    const int64_t count = slot.at("count").get<int64_t>();
    if (count != dst.size())
        fail(what + ": manifest declares " + std::to_string(count) + " floats, layer needs " +
             std::to_string(dst.size()));
    if (offset < 0 || offset + count > static_cast<int64_t>(payload.size()))
        fail(what + ": weight range [" + std::to_string(offset) + ", " +
             std::to_string(offset + count) + ") exceeds blob payload of " +
             std::to_string(payload.size()) + " floats");
    std::memcpy(dst.data.data(), payload.data() + offset, static_cast<size_t>(count) * sizeof(float));
    for (int64_t i = 0; i < dst.size(); ++i)
        if (!std::isfinite(dst.data[i])) fail(what + ": non-finite weight value at index " + std::to_string(i));
}

} // namespace

Model load_model(const std::string& manifest_path) {
    std::ifstream mf(manifest_path);
    if (!mf) fail("cannot open model manifest '" + manifest_path + "'");
    json doc;
    try {
        doc = json::parse(mf);
    } catch (const std::exception& e) {
        fail("manifest '" + manifest_path + "' is not valid JSON: " + e.what());
    }
    if (doc.value("format", "") != "rxai-model/1")
        fail("manifest '" + manifest_path + "': unsupported format '" + doc.value("format", "") + "'");

    Model model;
    model.name = doc.value("name", "unnamed");
    model.input_shape = doc.at("input_shape").get<std::vector<int>>();
    if (doc.contains("class_names"))
        model.class_names = doc.at("class_names").get<std::vector<std::string>>();

    const fs::path blob_path = fs::path(manifest_path).parent_path() /
                               doc.at("weights").get<std::string>();
    std::ifstream bf(blob_path, std::ios::binary);
    if (!bf) fail("cannot open weight blob '" + blob_path.string() + "'");
    char magic[8];
    bf.read(magic, 8);
    if (bf.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        fail("weight blob '" + blob_path.string() + "': bad magic, expected RXAIW001");

    const int64_t declared = doc.at("float_count").get<int64_t>();
    std::vector<float> payload(static_cast<size_t>(declared));
    bf.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(declared * static_cast<int64_t>(sizeof(float))));
    const int64_t got = bf.gcount() / static_cast<int64_t>(sizeof(float));
    bf.peek();
    if (got != declared || !bf.eof())
        fail("weight blob '" + blob_path.string() + "': float count mismatch, manifest declares " +
             std::to_string(declared) + " but blob holds " + std::to_string(bf.eof() ? got : got + 1) +
             (bf.eof() ? "" : " or more"));

    for (const json& jl : doc.at("layers")) {
        LayerSpec layer = layer_from_json(jl);
        const std::string what = "layer " + std::to_string(model.layers.size()) + " (" +
                                 layer_kind_name(layer.kind) + ")";
        if (layer.weights) read_blob_into(jl.at("weights"), payload, *layer.weights, what);
        if (layer.bias) read_blob_into(jl.at("bias"), payload, *layer.bias, what);
        model.layers.push_back(std::move(layer));
    }
    model.check_shapes();
    return model;
}

void save_model(const Model& model, const std::string& manifest_path,
                const std::string& weights_path) {
    model.check_shapes();
    json doc;
    doc["format"] = "rxai-model/1";
    doc["name"] = model.name;
    doc["input_shape"] = model.input_shape;
    if (!model.class_names.empty()) doc["class_names"] = model.class_names;
    doc["weights"] = fs::path(weights_path).filename().string();

    int64_t offset = 0;
    json layers = json::array();
    for (const LayerSpec& l : model.layers) layers.push_back(layer_to_json(l, offset));
    doc["layers"] = std::move(layers);
    doc["float_count"] = offset;

    std::ofstream bf(weights_path, std::ios::binary);
    if (!bf) fail("cannot write weight blob '" + weights_path + "'");
    bf.write(kMagic, 8);
    for (const LayerSpec& l : model.layers) {
        if (l.weights)
            bf.write(reinterpret_cast<const char*>(l.weights->data.data()),
                     static_cast<std::streamsize>(l.weights->size() * sizeof(float)));
        if (l.bias)
            bf.write(reinterpret_cast<const char*>(l.bias->data.data()),
                     static_cast<std::streamsize>(l.bias->size() * sizeof(float)));
    }
    if (!bf) fail("short write on '" + weights_path + "'");

    std::ofstream mf(manifest_path);
    if (!mf) fail("cannot write manifest '" + manifest_path + "'");
    mf << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Reference presets.

namespace {

// Weights: uniform in [-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
// Biases: uniform in [-0.1, 0.1). One SplitMix64 stream per model, consumed
// in layer order, weights before bias.
void init_layer(LayerSpec& l, SplitMix64& rng) {
    if (!l.weights) return;
    int64_t fan_in = 0, fan_out = 0;
    if (l.kind == LayerKind::Conv2d) {
        fan_in = static_cast<int64_t>(l.in_channels) * l.kernel * l.kernel;
        fan_out = static_cast<int64_t>(l.out_channels) * l.kernel * l.kernel;
    } else {
        fan_in = l.in_features;
        fan_out = l.out_features;
    }
    const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    for (int64_t i = 0; i < l.weights->size(); ++i) l.weights->data[i] = rng.next_symmetric(limit);
    for (int64_t i = 0; i < l.bias->size(); ++i) l.bias->data[i] = rng.next_symmetric(0.1f);
}

std::vector<std::string> digit_class_names() {
    std::vector<std::string> names;
    for (int i = 0; i < 10; ++i) names.push_back("class_" + std::to_string(i));
    return names;
}

} // namespace

Model make_reference_model(uint64_t seed, const std::string& preset) {
    Model m;
    if (preset == "tiny8") {
        m.name = "tiny8";
        m.input_shape = {3, 32, 32};
        m.layers = {
            LayerSpec::conv2d(3, 8, 3, 1, 1),   // 8x32x32
            LayerSpec::relu(),
            LayerSpec::maxpool2d(2, 2),         // 8x16x16
            LayerSpec::conv2d(8, 16, 3, 2, 1),  // 16x8x8
            LayerSpec::relu(),
            LayerSpec::maxpool2d(2, 2),         // 16x4x4  <- feature map
            LayerSpec::global_avg_pool(),       // 16
            LayerSpec::linear(16, 10),
        };
    } else if (preset == "mid16") {
        m.name = "mid16";
        m.input_shape = {3, 64, 64};
        m.layers = {
            LayerSpec::conv2d(3, 16, 3, 1, 1),  // 16x64x64
            LayerSpec::relu(),
            LayerSpec::maxpool2d(2, 2),         // 16x32x32
            LayerSpec::conv2d(16, 32, 3, 1, 1), // 32x32x32
            LayerSpec::relu(),
            LayerSpec::avgpool2d(2, 2),         // 32x16x16
            LayerSpec::conv2d(32, 48, 3, 1, 1), // 48x16x16
            LayerSpec::relu(),
            LayerSpec::maxpool2d(2, 2),         // 48x8x8
            LayerSpec::conv2d(48, 64, 3, 1, 1), // 64x8x8
            LayerSpec::relu(),
            LayerSpec::conv2d(64, 64, 3, 1, 1), // 64x8x8
            LayerSpec::relu(),                  // 64x8x8  <- feature map
            LayerSpec::global_avg_pool(),       // 64
            LayerSpec::linear(64, 10),
            LayerSpec::softmax(),
        };
    } else {
        fail("unknown preset '" + preset + "' (available: tiny8, mid16)");
    }
    m.class_names = digit_class_names();
    SplitMix64 rng(seed);
    for (LayerSpec& l : m.layers) init_layer(l, rng);
    m.check_shapes();
    return m;
}

Tensor seeded_input(const Model& model, uint64_t seed) {
    Tensor t(model.input_shape);
    SplitMix64 rng(seed ^ 0xA5A5A5A5A5A5A5A5ULL);
    for (int64_t i = 0; i < t.size(); ++i) t.data[i] = rng.next_unit();
    return t;
}

} // namespace rxai
