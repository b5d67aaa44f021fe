#pragma once

#include "rxai/tensor.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rxai {

/// 8-bit interleaved RGB raster.
struct ImageU8 {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb; // height * width * 3

    uint8_t* pixel(int y, int x) { return rgb.data() + (static_cast<size_t>(y) * width + x) * 3; }
    const uint8_t* pixel(int y, int x) const {
        return rgb.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
};

/// Binary PPM (P6, maxval 255). Rejects other magics with a clear message;
/// PNG or other formats can be added behind this same loader surface.
ImageU8 load_image(const std::string& path);
void write_ppm(const std::string& path, const ImageU8& img);
/// Binary PGM (P5, maxval 255).
void write_pgm(const std::string& path, int width, int height, const std::vector<uint8_t>& gray);

struct PreprocessConfig {
    int resize_to = 256;
    int crop_to = 224;
    std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
    std::array<float, 3> std{0.229f, 0.224f, 0.225f};

    /// Standard ImageNet-style config scaled to a square model input of
    /// `crop` pixels, keeping the 256:224 resize-to-crop ratio.
    static PreprocessConfig for_input(int crop);
};

/// [0,1]-scaled CHW tensor of the raw image, no resize or normalization.
Tensor image_to_tensor(const ImageU8& img);

/// Clamps a [0,1] CHW tensor back to an 8-bit image (rounding to nearest).
ImageU8 tensor_to_image(const Tensor& chw);

/// Bilinear resample with half-pixel center alignment; works for any CHW
/// tensor. Values stay within [min, max] of the source.
Tensor resize_bilinear(const Tensor& chw, int out_h, int out_w);

/// Aspect-preserving resize of the shorter side to cfg.resize_to, center crop
/// to cfg.crop_to, scale to [0,1], then per-channel (x - mean) / std.
Tensor preprocess_image(const ImageU8& img, const PreprocessConfig& cfg);

/// The resized-and-cropped image itself (pre normalization), for overlays.
ImageU8 preprocess_crop(const ImageU8& img, const PreprocessConfig& cfg);

} // namespace rxai
