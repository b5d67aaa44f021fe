// Fixture generator: writes reference models (manifest + RXAIW001 blob) and
// deterministic test images. The files under fixtures/ were produced with
// this tool; regenerating with the same seed reproduces them byte for byte.

#include "rxai/image.hpp"
#include "rxai/model.hpp"
#include "rxai/prng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace {

// Smoothed random blobs over per-channel gradients: structured enough that
// saliency methods have something to localize.
rxai::ImageU8 synth_image(uint64_t seed, int size) {
    rxai::SplitMix64 rng(seed);
    struct Blob {
        float cx, cy, radius, amp;
        float w[3];
    };
    std::vector<Blob> blobs;
    for (int i = 0; i < 6; ++i) {
        Blob b;
        b.cx = rng.next_unit() * static_cast<float>(size);
        b.cy = rng.next_unit() * static_cast<float>(size);
        b.radius = (0.08f + 0.17f * rng.next_unit()) * static_cast<float>(size);
        b.amp = 0.4f + 0.6f * rng.next_unit();
        for (float& w : b.w) w = rng.next_unit();
        blobs.push_back(b);
    }
    const float gx = rng.next_unit() * 0.4f, gy = rng.next_unit() * 0.4f;

    rxai::ImageU8 img;
    img.width = img.height = size;
    img.rgb.resize(static_cast<size_t>(size) * size * 3);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            float v[3];
            for (int c = 0; c < 3; ++c)
                v[c] = 0.15f + gx * static_cast<float>(x) / size + gy * static_cast<float>(y) / size;
            for (const Blob& b : blobs) {
                const float dx = static_cast<float>(x) - b.cx, dy = static_cast<float>(y) - b.cy;
                const float g = b.amp * std::exp(-(dx * dx + dy * dy) / (2.0f * b.radius * b.radius));
                for (int c = 0; c < 3; ++c) v[c] += g * b.w[c];
            }
            uint8_t* p = img.pixel(y, x);
            for (int c = 0; c < 3; ++c)
                p[c] = static_cast<uint8_t>(std::lround(std::clamp(v[c], 0.0f, 1.0f) * 255.0f));
        }
    return img;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate rxai reference models and fixture images"};
    app.require_subcommand(1);

    std::string preset = "tiny8", out_dir = ".", out_path = "image.ppm";
    uint64_t seed = 42;
    int size = 64;

    auto* model_cmd = app.add_subcommand("model", "Write <preset>_s<seed>.{json,rxaiw}");
    model_cmd->add_option("--preset", preset, "tiny8|mid16");
    model_cmd->add_option("--seed", seed);
    model_cmd->add_option("--out", out_dir, "output directory");

    auto* image_cmd = app.add_subcommand("image", "Write a deterministic PPM test image");
    image_cmd->add_option("--seed", seed);
    image_cmd->add_option("--size", size);
    image_cmd->add_option("--out", out_path, "output file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(model_cmd)) {
            const rxai::Model model = rxai::make_reference_model(seed, preset);
            fs::create_directories(out_dir);
            const std::string base =
                (fs::path(out_dir) / (preset + "_s" + std::to_string(seed))).string();
            rxai::save_model(model, base + ".json", base + ".rxaiw");
            std::cout << "wrote " << base << ".{json,rxaiw}\n";
        } else {
            const rxai::ImageU8 img = synth_image(seed, size);
            if (fs::path(out_path).has_parent_path())
                fs::create_directories(fs::path(out_path).parent_path());
            rxai::write_ppm(out_path, img);
            std::cout << "wrote " << out_path << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
