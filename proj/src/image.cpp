#include "rxai/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace rxai {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

// PNM headers allow '#' comments between tokens.
int read_pnm_int(std::istream& in, const std::string& path) {
    while (true) {
        int c = in.peek();
        if (c == EOF) fail("'" + path + "': truncated PNM header");
        if (std::isspace(c)) {
            in.get();
        } else if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            break;
        }
    }
    int value = 0;
    in >> value;
    if (!in) fail("'" + path + "': malformed PNM header");
    return value;
}

} // namespace

ImageU8 load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open image '" + path + "'");
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '6') {
        if (m0 == 'P' && (m1 == '5' || m1 == '2' || m1 == '1' || m1 == '4'))
            fail("'" + path + "': grayscale/bitmap PNM is not RGB; need P6");
        fail("'" + path + "': unsupported image format (need binary PPM, magic P6)");
    }
    ImageU8 img;
    img.width = read_pnm_int(in, path);
    img.height = read_pnm_int(in, path);
    const int maxval = read_pnm_int(in, path);
    if (img.width < 1 || img.height < 1) fail("'" + path + "': image smaller than 1x1");
    if (maxval != 255) fail("'" + path + "': only maxval 255 PPM is supported, got " + std::to_string(maxval));
    in.get(); // single whitespace after maxval
    img.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);
    in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
    if (static_cast<size_t>(in.gcount()) != img.rgb.size())
        fail("'" + path + "': truncated pixel data");
    return img;
}

void write_ppm(const std::string& path, const ImageU8& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write image '" + path + "'");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.rgb.data()),
              static_cast<std::streamsize>(img.rgb.size()));
    if (!out) fail("short write on '" + path + "'");
}

void write_pgm(const std::string& path, int width, int height, const std::vector<uint8_t>& gray) {
    if (gray.size() != static_cast<size_t>(width) * height)
        fail("pgm: " + std::to_string(gray.size()) + " bytes for " + std::to_string(width) + "x" +
             std::to_string(height));
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write image '" + path + "'");
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
    if (!out) fail("short write on '" + path + "'");
}

PreprocessConfig PreprocessConfig::for_input(int crop) {
    PreprocessConfig cfg;
    cfg.crop_to = crop;
    cfg.resize_to = static_cast<int>(std::lround(crop * 256.0 / 224.0));
    return cfg;
}

Tensor image_to_tensor(const ImageU8& img) {
    Tensor t({3, img.height, img.width});
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const uint8_t* p = img.pixel(y, x);
            for (int c = 0; c < 3; ++c) t.at(c, y, x) = static_cast<float>(p[c]) / 255.0f;
        }
    return t;
}

ImageU8 tensor_to_image(const Tensor& chw) {
    if (chw.rank() != 3 || chw.dim(0) != 3)
        fail("tensor_to_image: expected 3xHxW, got " + shape_str(chw.shape));
    ImageU8 img;
    img.height = chw.dim(1);
    img.width = chw.dim(2);
    img.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            uint8_t* p = img.pixel(y, x);
            for (int c = 0; c < 3; ++c) {
                const float v = std::clamp(chw.at(c, y, x), 0.0f, 1.0f);
                p[c] = static_cast<uint8_t>(std::lround(v * 255.0f));
            }
        }
    return img;
}

Tensor resize_bilinear(const Tensor& chw, int out_h, int out_w) {
    if (chw.rank() != 3) fail("resize_bilinear: expected CxHxW, got " + shape_str(chw.shape));
    if (out_h < 1 || out_w < 1) fail("resize_bilinear: target must be at least 1x1");
    const int c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
    if (out_h == h && out_w == w) return chw;

    Tensor out({c, out_h, out_w});
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int oy = 0; oy < out_h; ++oy) {
        const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int ox = 0; ox < out_w; ++ox) {
            const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            for (int k = 0; k < c; ++k) {
                const double top = (1.0 - wx) * chw.at(k, y0, x0) + wx * chw.at(k, y0, x1);
                const double bot = (1.0 - wx) * chw.at(k, y1, x0) + wx * chw.at(k, y1, x1);
                out.at(k, oy, ox) = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

namespace {

Tensor resize_shorter_side(const Tensor& chw, int target) {
    const int h = chw.dim(1), w = chw.dim(2);
    int out_h, out_w;
    if (h <= w) {
        out_h = target;
        out_w = static_cast<int>(std::lround(static_cast<double>(w) * target / h));
    } else {
        out_w = target;
        out_h = static_cast<int>(std::lround(static_cast<double>(h) * target / w));
    }
    return resize_bilinear(chw, out_h, out_w);
}

Tensor center_crop(const Tensor& chw, int crop) {
    const int c = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
    if (h < crop || w < crop)
        fail("center_crop: image is " + std::to_string(w) + "x" + std::to_string(h) +
             " after resize, smaller than crop " + std::to_string(crop));
    const int y0 = (h - crop) / 2, x0 = (w - crop) / 2;
    Tensor out({c, crop, crop});
    for (int k = 0; k < c; ++k)
        out.channel(k) = chw.channel(k).block(y0, x0, crop, crop);
    return out;
}

void check_cfg(const PreprocessConfig& cfg) {
    if (cfg.crop_to > cfg.resize_to)
        fail("preprocess: crop " + std::to_string(cfg.crop_to) + " exceeds resize " +
             std::to_string(cfg.resize_to));
    for (float s : cfg.std)
        if (s <= 0.0f) fail("preprocess: std components must be positive");
}

} // namespace

Tensor preprocess_image(const ImageU8& img, const PreprocessConfig& cfg) {
    check_cfg(cfg);
    if (img.width < 1 || img.height < 1) fail("preprocess: image smaller than 1x1");
    Tensor t = center_crop(resize_shorter_side(image_to_tensor(img), cfg.resize_to), cfg.crop_to);
    for (int c = 0; c < 3; ++c)
        t.channel(c) = (t.channel(c).array() - cfg.mean[static_cast<size_t>(c)]) /
                       cfg.std[static_cast<size_t>(c)];
    return t;
}

ImageU8 preprocess_crop(const ImageU8& img, const PreprocessConfig& cfg) {
    check_cfg(cfg);
    if (img.width < 1 || img.height < 1) fail("preprocess: image smaller than 1x1");
    return tensor_to_image(center_crop(resize_shorter_side(image_to_tensor(img), cfg.resize_to),
                                       cfg.crop_to));
}

} // namespace rxai
