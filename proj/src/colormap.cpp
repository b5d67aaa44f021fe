#include "rxai/colormap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rxai {

namespace {

// Piecewise-linear ramp through blue (0,0,255) -> cyan -> yellow -> red.
std::array<std::array<uint8_t, 3>, 256> build_lut() {
    std::array<std::array<uint8_t, 3>, 256> lut{};
    constexpr int anchors[4][3] = {{0, 0, 255}, {0, 255, 255}, {255, 255, 0}, {255, 0, 0}};
    for (int i = 0; i < 256; ++i) {
        const double t = i / 255.0 * 3.0;
        const int seg = std::min(2, static_cast<int>(t));
        const double f = t - seg;
        for (int c = 0; c < 3; ++c) {
            const double v = anchors[seg][c] * (1.0 - f) + anchors[seg + 1][c] * f;
            lut[static_cast<size_t>(i)][static_cast<size_t>(c)] =
                static_cast<uint8_t>(std::lround(v));
        }
    }
    return lut;
}

} // namespace

const std::array<std::array<uint8_t, 3>, 256>& blue_red_lut() {
    static const auto lut = build_lut();
    return lut;
}

std::array<uint8_t, 3> colormap_rgb(float value) {
    const float v = std::clamp(value, 0.0f, 1.0f);
    const int idx = static_cast<int>(std::lround(v * 255.0f));
    return blue_red_lut()[static_cast<size_t>(idx)];
}

ImageU8 render_overlay(const ImageU8& base, const Tensor& saliency, float alpha) {
    if (saliency.rank() != 2 || saliency.dim(0) != base.height || saliency.dim(1) != base.width)
        throw std::invalid_argument("overlay: saliency " + shape_str(saliency.shape) +
                                    " does not match image " + std::to_string(base.width) + "x" +
                                    std::to_string(base.height));
    ImageU8 out = base;
    for (int y = 0; y < base.height; ++y)
        for (int x = 0; x < base.width; ++x) {
            const auto hot = colormap_rgb(saliency.plane()(y, x));
            uint8_t* p = out.pixel(y, x);
            for (int c = 0; c < 3; ++c) {
                const float v = alpha * static_cast<float>(hot[static_cast<size_t>(c)]) +
                                (1.0f - alpha) * static_cast<float>(p[c]);
                p[c] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f)));
            }
        }
    return out;
}

std::vector<uint8_t> saliency_to_gray(const Tensor& saliency) {
    if (saliency.rank() != 2)
        throw std::invalid_argument("saliency_to_gray: expected HxW, got " + shape_str(saliency.shape));
    std::vector<uint8_t> gray(static_cast<size_t>(saliency.size()));
    for (int64_t i = 0; i < saliency.size(); ++i)
        gray[static_cast<size_t>(i)] = static_cast<uint8_t>(
            std::lround(std::clamp(saliency.data[i], 0.0f, 1.0f) * 255.0f));
    return gray;
}

} // namespace rxai
