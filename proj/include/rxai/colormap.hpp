#pragma once

#include "rxai/image.hpp"
#include "rxai/tensor.hpp"

#include <array>
#include <cstdint>

namespace rxai {

/// Fixed 256-entry blue-to-red lookup table (blue -> cyan -> yellow -> red),
/// shipped as a constant so overlays are reproducible byte for byte.
const std::array<std::array<uint8_t, 3>, 256>& blue_red_lut();

/// Maps a [0,1] value through the LUT.
std::array<uint8_t, 3> colormap_rgb(float value);

/// alpha * colormap(saliency) + (1 - alpha) * base, per pixel. The saliency
/// tensor must match the base image size.
ImageU8 render_overlay(const ImageU8& base, const Tensor& saliency, float alpha = 0.5f);

/// [0,1] map values to an 8-bit grayscale raster (row-major).
std::vector<uint8_t> saliency_to_gray(const Tensor& saliency);

} // namespace rxai
