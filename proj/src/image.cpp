#include "anomalnet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace anomalnet {

namespace {

constexpr uint8_t kPngSig[8] = {0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A};

enum class ImageKind { none, png, pgm, ppm };

ImageKind sniff(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return ImageKind::none;
    uint8_t head[8] = {};
    f.read(reinterpret_cast<char*>(head), sizeof(head));
    if (f.gcount() >= 8 && std::equal(head, head + 8, kPngSig)) return ImageKind::png;
    if (f.gcount() >= 3 && head[0] == 'P' && (head[1] == '5' || head[1] == '6') &&
        std::isspace(head[2]))
        return head[1] == '5' ? ImageKind::pgm : ImageKind::ppm;
    return ImageKind::none;
}

Tensor<float> decode_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw_data("cannot decode PNG " + path + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw_data("cannot decode PNG " + path + ": " + msg);
    }
    const int h = (int)image.height, w = (int)image.width;
    Tensor<float> out({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                out[((int64_t)c * h + y) * w + x] = (float)buffer[((int64_t)y * w + x) * 3 + c];
    return out;
}

// P5/P6 with maxval <= 255
Tensor<float> decode_pnm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw_io("cannot open image: " + path);

    auto next_token = [&]() -> std::string {
        std::string tok;
        int ch;
        while ((ch = f.get()) != EOF) {
            if (ch == '#') {
                while ((ch = f.get()) != EOF && ch != '\n') {}
                continue;
            }
            if (std::isspace(ch)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back((char)ch);
        }
        return tok;
    };

    const std::string magic = next_token();
    if (magic != "P5" && magic != "P6") throw_data("not a binary PGM/PPM file: " + path);
    const bool color = magic == "P6";
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw_data("malformed PNM header: " + path);
    }
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw_data("unsupported PNM geometry or maxval: " + path);

    const size_t count = (size_t)w * h * (color ? 3 : 1);
    std::vector<uint8_t> raw(count);
    f.read(reinterpret_cast<char*>(raw.data()), (std::streamsize)count);
    if ((size_t)f.gcount() != count) throw_data("truncated PNM payload: " + path);

    const float scale = 255.0f / (float)maxval;
    Tensor<float> out({3, h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (color) {
                for (int c = 0; c < 3; ++c)
                    out[((int64_t)c * h + y) * w + x] =
                        scale * (float)raw[((size_t)y * w + x) * 3 + (size_t)c];
            } else {
                const float v = scale * (float)raw[(size_t)y * w + x];
                for (int c = 0; c < 3; ++c) out[((int64_t)c * h + y) * w + x] = v;
            }
        }
    }
    return out;
}

inline float lerp(float a, float b, float t) { return a + t * (b - a); }

} // namespace

bool is_image_file(const std::string& path) { return sniff(path) != ImageKind::none; }

Tensor<float> decode_image(const std::string& path) {
    if (!std::ifstream(path, std::ios::binary)) throw_io("cannot open image: " + path);
    switch (sniff(path)) {
    case ImageKind::png: return decode_png(path);
    case ImageKind::pgm:
    case ImageKind::ppm: return decode_pnm(path);
    case ImageKind::none: break;
    }
    throw_data("unrecognized image format: " + path);
}

Tensor<float> to_grayscale(const Tensor<float>& rgb) {
    if (rgb.rank() != 3 || rgb.dim(0) != 3)
        throw_invalid_argument("to_grayscale expects a [3,H,W] tensor");
    const int64_t h = rgb.dim(1), w = rgb.dim(2);
    Tensor<float> out({1, h, w});
    const float* r = rgb.data();
    const float* g = r + h * w;
    const float* b = g + h * w;
    float* y = out.data();
    // anchored on G so equal channels come out bit-exact
    constexpr float cr = 0.299f, cb = 0.114f;
    for (int64_t i = 0; i < h * w; ++i) y[i] = g[i] + cr * (r[i] - g[i]) + cb * (b[i] - g[i]);
    return out;
}

Tensor<float> resize_bilinear(const Tensor<float>& img, int out_h, int out_w) {
    if (img.rank() != 3) throw_invalid_argument("resize_bilinear expects a [C,H,W] tensor");
    if (out_h < 1 || out_w < 1) throw_invalid_argument("resize target must be non-empty");
    const int c_n = (int)img.dim(0), h = (int)img.dim(1), w = (int)img.dim(2);
    Tensor<float> out({c_n, out_h, out_w});
    const double scale_y = (double)h / out_h;
    const double scale_x = (double)w / out_w;

    for (int c = 0; c < c_n; ++c) {
        const float* plane = img.data() + (int64_t)c * h * w;
        float* op = out.data() + (int64_t)c * out_h * out_w;
        for (int dy = 0; dy < out_h; ++dy) {
            const double sy = (dy + 0.5) * scale_y - 0.5;
            const double fy = sy - std::floor(sy);
            const int y0 = std::clamp((int)std::floor(sy), 0, h - 1);
            const int y1 = std::clamp((int)std::floor(sy) + 1, 0, h - 1);
            for (int dx = 0; dx < out_w; ++dx) {
                const double sx = (dx + 0.5) * scale_x - 0.5;
                const double fx = sx - std::floor(sx);
                const int x0 = std::clamp((int)std::floor(sx), 0, w - 1);
                const int x1 = std::clamp((int)std::floor(sx) + 1, 0, w - 1);
                const float top = lerp(plane[(int64_t)y0 * w + x0], plane[(int64_t)y0 * w + x1],
                                       (float)fx);
                const float bot = lerp(plane[(int64_t)y1 * w + x0], plane[(int64_t)y1 * w + x1],
                                       (float)fx);
                op[(int64_t)dy * out_w + dx] = lerp(top, bot, (float)fy);
            }
        }
    }
    return out;
}

Tensor<float> preprocess_image(const std::string& path, int size) {
    Tensor<float> gray = to_grayscale(decode_image(path));
    Tensor<float> small = resize_bilinear(gray, size, size);
    for (int64_t i = 0; i < small.numel(); ++i)
        small[i] = std::clamp(small[i] / 255.0f, 0.0f, 1.0f);
    return small;
}

std::vector<uint8_t> quantize_u8(const Tensor<float>& img) {
    std::vector<uint8_t> out((size_t)img.numel());
    for (int64_t i = 0; i < img.numel(); ++i) {
        const float v = std::floor(img[i] * 255.0f + 0.5f);
        out[(size_t)i] = (uint8_t)std::clamp(v, 0.0f, 255.0f);
    }
    return out;
}

void write_pgm(const std::string& path, const std::vector<uint8_t>& pixels, int width,
               int height) {
    if ((size_t)width * height != pixels.size())
        throw_invalid_argument("pgm pixel count does not match dimensions");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw_io("cannot open for writing: " + path);
    f << "P5\n" << width << " " << height << "\n255\n";
    f.write(reinterpret_cast<const char*>(pixels.data()), (std::streamsize)pixels.size());
    if (!f) throw_io("write failed: " + path);
}

} // namespace anomalnet
